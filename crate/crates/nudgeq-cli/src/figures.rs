//! The `figure` subcommand: bundled tail-improvement curve collections.
//!
//! Each figure is a fixed set of (distribution, load, cutoffs) series.
//! Every series gets its own TIR CSV; an `index.json` ties labels to
//! files and records the analytic decay rate and asymptotic improvement
//! alongside, so the curves can be plotted against their limits.

use std::path::Path;

use nudgeq::dist::JobDist;
use nudgeq::fcfs::decay_rate;
use nudgeq::nudge::{asym_tir, NudgeParams};
use nudgeq::sim::{coupled_run, Policy};

use crate::config::Resolved;
use crate::output::{cutoff_value, with_outputs};
use crate::run::{coupled_summary_block, derive_thresholds, fmt_err, sim_config};
use crate::RunScale;

/// One curve of a bundled figure.
struct Series {
    label: String,
    dist: JobDist,
    lambda: f64,
    params: NudgeParams,
    /// Variance group for figures that split series into panels.
    group: Option<&'static str>,
}

fn series(label: &str, dist: JobDist, rho: f64, params: NudgeParams) -> Series {
    let lambda = rho / dist.mean();
    Series {
        label: label.to_string(),
        dist,
        lambda,
        params,
        group: None,
    }
}

fn hyperexp() -> JobDist {
    JobDist::hyperexp(vec![0.8, 0.2], vec![2.0, 1.0 / 3.0]).unwrap()
}

/// Four mean-1 distributions of increasing tail weight at load 0.8, all
/// with every job below the mean small and everything else large.
fn fig2_series() -> Vec<Series> {
    let p = NudgeParams::new(1.0, 1.0, f64::INFINITY).unwrap();
    vec![
        series("uniform", JobDist::uniform(0.0, 2.0).unwrap(), 0.8, p),
        series("exponential", JobDist::exponential(1.0).unwrap(), 0.8, p),
        series("hyperexp", hyperexp(), 0.8, p),
        series(
            "bounded_lomax",
            JobDist::bounded_lomax(2.0, 4.0, 2.0).unwrap(),
            0.8,
            p,
        ),
    ]
}

/// One distribution, several cutoff choices: how the parameters shape the
/// improvement.
fn fig3_series() -> Vec<Series> {
    let cuts = [
        (1.0, 1.0, f64::INFINITY),
        (1.0, 2.0, f64::INFINITY),
        (0.5, 0.5, f64::INFINITY),
        (1.0, 2.0, 4.0),
        (0.5, 1.0, 4.0),
    ];
    cuts.iter()
        .map(|&(x1, x2, x3)| {
            let tag = |v: f64| {
                if v.is_finite() {
                    format!("{v}")
                } else {
                    "inf".to_string()
                }
            };
            series(
                &format!("x1_{}_x2_{}_x3_{}", tag(x1), tag(x2), tag(x3)),
                hyperexp(),
                0.8,
                NudgeParams::new(x1, x2, x3).unwrap(),
            )
        })
        .collect()
}

/// Low-load panel: high-variance distributions with the cutoff at the
/// mean, low-variance distributions with a small cutoff.
fn fig4_series() -> Vec<Series> {
    let high = NudgeParams::new(1.0, 1.0, f64::INFINITY).unwrap();
    let low = NudgeParams::new(0.2, 0.2, f64::INFINITY).unwrap();
    let mut out = vec![
        series(
            "mixed_uniform",
            JobDist::mixed_uniform(vec![0.9, 0.1], vec![0.0, 0.0], vec![1.0, 11.0]).unwrap(),
            0.4,
            high,
        ),
        series("hyperexp", hyperexp(), 0.4, high),
        series("chi_squared", JobDist::chi_squared(1).unwrap(), 0.4, high),
        series(
            "inverse_gaussian",
            JobDist::inverse_gaussian(1.0, 0.5).unwrap(),
            0.4,
            high,
        ),
        series("triangle", JobDist::triangle(0.0, 0.0, 3.0).unwrap(), 0.4, low),
        series("uniform", JobDist::uniform(0.0, 2.0).unwrap(), 0.4, low),
        series("erlang", JobDist::erlang(3, 3.0).unwrap(), 0.4, low),
        series(
            "beta",
            JobDist::beta_scaled(2.0, 2.0, 2.0).unwrap(),
            0.4,
            low,
        ),
    ];
    for s in &mut out[..4] {
        s.group = Some("high_variance");
    }
    for s in &mut out[4..] {
        s.group = Some("low_variance");
    }
    out
}

pub fn cmd_figure(name: &str, scale: &RunScale, out_dir: &Path) -> Result<i32, String> {
    let list = match name {
        "fig2" => fig2_series(),
        "fig3" => fig3_series(),
        "fig4" => fig4_series(),
        other => return Err(format!("unknown figure {other:?}")),
    };
    with_outputs(out_dir, |out| {
        let mut index_entries = Vec::new();
        let mut summary = String::new();
        for (i, s) in list.iter().enumerate() {
            eprintln!(
                "[{}/{}] {} {}: {} arrivals...",
                i + 1,
                list.len(),
                name,
                s.label,
                scale.n_arrivals
            );
            let resolved = Resolved {
                dist: s.dist.clone(),
                dist_value: serde_json::to_value(s.dist.spec()).map_err(|e| e.to_string())?,
                lambda: s.lambda,
                rho: s.lambda * s.dist.mean(),
                params: s.params,
                policies: vec![Policy::Nudge(s.params)],
                n_arrivals: scale.n_arrivals,
                seed: scale.seed,
                replications: scale.replications,
                thresholds: None,
                out_dir: out.dir().to_path_buf(),
            };
            let thresholds = derive_thresholds(&resolved)?;
            let cfg = sim_config(&resolved, Policy::Nudge(s.params), thresholds);
            let o = coupled_run(&cfg).map_err(fmt_err)?;
            let curve = o.tir_curve().map_err(fmt_err)?;
            let file = format!("{name}_{}_tir.csv", s.label);
            let mut buf = Vec::new();
            curve.write_csv(&mut buf).map_err(|e| e.to_string())?;
            out.write(&file, &buf).map_err(|e| e.to_string())?;
            summary.push_str(&coupled_summary_block(&format!("{name} {}", s.label), &o));

            // Analytic companions are best-effort: a series whose decay
            // rate cannot be computed still gets its empirical curve.
            let theta = decay_rate(s.lambda, &s.dist).ok();
            let analytic = theta
                .and_then(|t| asym_tir(&s.params, &s.dist, s.lambda, t).ok());
            index_entries.push(serde_json::json!({
                "label": s.label,
                "file": file,
                "group": s.group,
                "distribution": resolved.dist_value,
                "lambda": s.lambda,
                "rho": resolved.rho,
                "x1": s.params.x1,
                "x2": s.params.x2,
                "x3": cutoff_value(s.params.x3),
                "theta_star": theta,
                "asym_tir": analytic,
            }));
        }
        out.write(&format!("{name}_summary.txt"), summary.as_bytes())
            .map_err(|e| e.to_string())?;
        let index = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": format!("figure {name}"),
            "n_arrivals": scale.n_arrivals,
            "seed": scale.seed,
            "replications": scale.replications,
            "series": index_entries,
            "outputs": out.names(),
        });
        let text = serde_json::to_string_pretty(&index).map_err(|e| e.to_string())?;
        out.write("index.json", text.as_bytes())
            .map_err(|e| e.to_string())?;
        Ok(0)
    })
}

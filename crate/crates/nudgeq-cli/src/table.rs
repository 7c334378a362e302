//! The `table1` subcommand: analytic improvement signs vs simulated
//! stochastic-improvement verdicts across a grid of distributions and
//! small-job cutoffs, all at load 0.4 with `x2 = x1` and an unbounded
//! large band.
//!
//! The point of the table is the agreement column: wherever the analytic
//! asymptotic improvement ratio is positive, the simulated curve should be
//! nonnegative across every confidently measured threshold, and vice
//! versa.

use std::path::Path;

use nudgeq::dist::JobDist;
use nudgeq::fcfs::decay_rate;
use nudgeq::nudge::{asym_tir, NudgeParams};
use nudgeq::sim::{coupled_run, Policy, TirCurve};

use crate::config::Resolved;
use crate::output::with_outputs;
use crate::run::{derive_thresholds_to, fmt_err, sim_config};
use crate::RunScale;

const TABLE_RHO: f64 = 0.4;

/// The table's threshold grids stop at the 1-in-10³ quantile rather than
/// the figure default of 1-in-10⁵. The verdict demands a significantly
/// nonnegative improvement at every threshold carrying 100+ tail samples,
/// so the grid must not reach depths where the confidence half-width
/// (a few percent at ~10³ samples) swamps the improvement being resolved
/// (1-5% at this load); at this floor the deepest thresholds keep about
/// n/1000 tail samples and the test retains real discriminating power on
/// both signs.
const TABLE_GRID_TAIL: f64 = 1e-3;

struct Row {
    family: &'static str,
    dist: JobDist,
    cutoffs: [f64; 5],
}

fn rows() -> Vec<Row> {
    vec![
        Row {
            family: "exponential",
            dist: JobDist::exponential(1.0).unwrap(),
            cutoffs: [0.5, 1.0, 2.0, 4.0, 8.0],
        },
        Row {
            family: "hyperexp",
            dist: JobDist::hyperexp(vec![0.8, 0.2], vec![2.0, 1.0 / 3.0]).unwrap(),
            cutoffs: [0.5, 1.0, 2.0, 4.0, 8.0],
        },
        Row {
            family: "bounded_lomax",
            dist: JobDist::bounded_lomax(2.0, 4.0, 2.0).unwrap(),
            cutoffs: [0.5, 1.0, 1.5, 2.0, 3.0],
        },
        Row {
            family: "uniform",
            dist: JobDist::uniform(0.0, 2.0).unwrap(),
            cutoffs: [0.1, 0.2, 0.5, 0.75, 1.0],
        },
        Row {
            family: "beta",
            dist: JobDist::beta_scaled(2.0, 2.0, 2.0).unwrap(),
            cutoffs: [0.1, 0.2, 0.3, 0.4, 0.5],
        },
    ]
}

/// Simulated stochastic-improvement verdict: every threshold where both
/// tails carry at least 100 samples must have its lower confidence edge at
/// or above zero, and the largest such threshold must show a strictly
/// positive improvement.
pub fn improvement_verdict(curve: &TirCurve) -> bool {
    let mut last_confident: Option<usize> = None;
    for i in 0..curve.thresholds.len() {
        if curve.low_confidence[i] {
            continue;
        }
        last_confident = Some(i);
        match curve.ci_low[i] {
            Some(lo) if lo >= 0.0 => {}
            _ => return false,
        }
    }
    match last_confident {
        Some(i) => matches!(curve.tir[i], Some(t) if t > 0.0),
        None => false,
    }
}

pub fn cmd_table1(smoke: bool, scale: &RunScale, out_dir: &Path) -> Result<i32, String> {
    let mut rows = rows();
    if smoke {
        rows.truncate(2);
    }
    let n_arrivals = if smoke && scale.arrivals_overridden {
        scale.n_arrivals
    } else if smoke {
        10_000_000
    } else {
        scale.n_arrivals
    };

    with_outputs(out_dir, |out| {
        let mut csv_rows: Vec<Vec<f64>> = Vec::new();
        let mut text = String::new();
        let mut index_rows = Vec::new();
        let mut disagreements = 0u32;
        let total_cells = rows.len() * 5;
        let mut cell = 0usize;

        for (row_idx, row) in rows.iter().enumerate() {
            let lambda = TABLE_RHO / row.dist.mean();
            let theta = decay_rate(lambda, &row.dist).map_err(fmt_err)?;
            let mut resolved = Resolved {
                dist: row.dist.clone(),
                dist_value: serde_json::to_value(row.dist.spec()).map_err(|e| e.to_string())?,
                lambda,
                rho: TABLE_RHO,
                params: NudgeParams::new(1.0, 1.0, f64::INFINITY).unwrap(),
                policies: Vec::new(),
                n_arrivals,
                seed: scale.seed,
                replications: scale.replications,
                thresholds: None,
                out_dir: out.dir().to_path_buf(),
            };
            // The FCFS side does not depend on the cutoff, so one derived
            // grid serves the whole row.
            let thresholds = derive_thresholds(&resolved)?;

            text.push_str(&format!("{:<14}", row.family));
            for &x1 in &row.cutoffs {
                cell += 1;
                eprintln!(
                    "[{cell}/{total_cells}] {} x1={x1}: {n_arrivals} arrivals...",
                    row.family
                );
                let params = NudgeParams::new(x1, x1, f64::INFINITY).unwrap();
                let analytic = asym_tir(&params, &row.dist, lambda, theta).map_err(fmt_err)?;
                let analytic_positive = analytic > 0.0;

                resolved.params = params;
                let cfg = sim_config(&resolved, Policy::Nudge(params), thresholds.clone());
                let o = coupled_run(&cfg).map_err(fmt_err)?;
                let curve = o.tir_curve().map_err(fmt_err)?;
                let improved = improvement_verdict(&curve);
                let agree = improved == analytic_positive;
                if !agree {
                    disagreements += 1;
                }

                csv_rows.push(vec![
                    row_idx as f64,
                    x1,
                    analytic,
                    f64::from(u8::from(analytic_positive)),
                    f64::from(u8::from(improved)),
                    f64::from(u8::from(agree)),
                ]);
                text.push_str(&format!(
                    " x1={x1}: {}/{}",
                    if analytic_positive { '+' } else { '-' },
                    if improved { '+' } else { '-' },
                ));
            }
            text.push('\n');
            index_rows.push(serde_json::json!({
                "row": row_idx,
                "family": row.family,
                "distribution": resolved.dist_value,
                "lambda": lambda,
                "theta_star": theta,
                "cutoffs": row.cutoffs,
            }));
        }
        text.push_str(&format!(
            "\ncells: {total_cells}, disagreements: {disagreements}\n\
             (each cell shows analytic-sign/simulated-verdict)\n"
        ));

        let mut buf = Vec::new();
        nudgeq::csvio::write_rows(
            &mut buf,
            "dist_index,x1,analytic_tir,analytic_positive,simulated_improved,agree",
            csv_rows.into_iter(),
        )
        .map_err(|e| e.to_string())?;
        out.write("table1.csv", &buf).map_err(|e| e.to_string())?;
        out.write("table1.txt", text.as_bytes())
            .map_err(|e| e.to_string())?;
        let index = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": if smoke { "table1 --smoke" } else { "table1" },
            "rho": TABLE_RHO,
            "n_arrivals": n_arrivals,
            "seed": scale.seed,
            "replications": scale.replications,
            "rows": index_rows,
            "outputs": out.names(),
        });
        let text = serde_json::to_string_pretty(&index).map_err(|e| e.to_string())?;
        out.write("table1_index.json", text.as_bytes())
            .map_err(|e| e.to_string())?;
        Ok(0)
    })
}

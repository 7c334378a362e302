//! The `check` and `run` subcommands, plus helpers shared by the bundled
//! experiment commands.

use nudgeq::error::Error;
use nudgeq::fcfs::FcfsQueue;
use nudgeq::nudge::check_regime;
use nudgeq::sim::{coupled_run, run, CoupledOutcome, Policy, SimConfig, SimulationOutcome};

use crate::config::{log_spaced, Resolved};
use crate::output::{cutoff_value, with_outputs, OutputSet};

/// Points in a derived threshold grid.
const DERIVED_GRID_POINTS: usize = 200;
/// The derived grid ends at the empirical quantile at this tail mass.
const DERIVED_GRID_TAIL: f64 = 1e-5;
/// Arrivals in the pilot run that locates that quantile.
const PILOT_ARRIVALS: u64 = 2_000_000;

pub fn fmt_err(e: Error) -> String {
    e.to_string()
}

/// Analytic regime check. Returns the process exit status: 0 when the
/// configuration improves the asymptotic tail, 2 when it does not.
pub fn cmd_check(resolved: &Resolved) -> Result<i32, String> {
    let queue = FcfsQueue::new(resolved.lambda, resolved.dist.clone()).map_err(fmt_err)?;
    let profile = queue.tail_profile_default().map_err(fmt_err)?;
    let report = check_regime(
        &resolved.params,
        &profile,
        &resolved.dist,
        resolved.lambda,
    )
    .map_err(fmt_err)?;
    print!("{}", report.to_text_block());
    Ok(if report.asym_condition { 0 } else { 2 })
}

/// Base simulation config for one policy of a resolved experiment.
pub fn sim_config(resolved: &Resolved, policy: Policy, thresholds: Vec<f64>) -> SimConfig {
    let mut cfg = SimConfig::new(resolved.lambda, resolved.dist.clone(), policy);
    cfg.n_arrivals = resolved.n_arrivals;
    cfg.seed = resolved.seed;
    cfg.replications = resolved.replications;
    cfg.thresholds = Some(thresholds);
    cfg
}

/// Default threshold grid: log-spaced from the mean response time out to
/// the empirical 1-in-10⁵ response-time quantile, both taken from a short
/// FCFS pilot run.
pub fn derive_thresholds(resolved: &Resolved) -> Result<Vec<f64>, String> {
    derive_thresholds_to(resolved, DERIVED_GRID_TAIL)
}

/// Threshold grid ending at the empirical quantile at `tail` mass.
pub fn derive_thresholds_to(resolved: &Resolved, tail: f64) -> Result<Vec<f64>, String> {
    let mut cfg = SimConfig::new(resolved.lambda, resolved.dist.clone(), Policy::Fcfs);
    cfg.n_arrivals = PILOT_ARRIVALS.min(resolved.n_arrivals.max(2));
    cfg.seed = resolved.seed;
    let pilot = run(&cfg).map_err(fmt_err)?;
    let lo = pilot.mean;
    let mut hi = pilot.histogram.quantile(1.0 - tail).map_err(fmt_err)?;
    if !(hi > lo * 1.01) {
        hi = lo * 50.0;
    }
    Ok(log_spaced(lo, hi, DERIVED_GRID_POINTS))
}

/// Key-value lines shared by both kinds of policy summary.
fn common_lines(out: &mut String, n_arrivals: u64, n_observed: u64, qe: u64, se: u64) {
    use std::fmt::Write;
    let n = n_observed as f64;
    writeln!(out, "arrivals: {n_arrivals}").unwrap();
    writeln!(out, "observed: {n_observed}").unwrap();
    writeln!(out, "queue_empty_fraction: {}", qe as f64 / n).unwrap();
    writeln!(out, "system_empty_fraction: {}", se as f64 / n).unwrap();
}

pub fn single_summary_block(label: &str, o: &SimulationOutcome) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "policy: {label}").unwrap();
    common_lines(
        &mut s,
        o.n_arrivals,
        o.n_observed,
        o.arrivals_seeing_queue_empty,
        o.arrivals_seeing_system_empty,
    );
    writeln!(s, "mean_response: {}", o.mean).unwrap();
    writeln!(s, "variance_response: {}", o.variance).unwrap();
    writeln!(s, "std_error_response: {}", o.std_error).unwrap();
    writeln!(s, "mean_queue_wait: {}", o.mean_queue_wait).unwrap();
    writeln!(s, "swaps: {}", o.n_swaps).unwrap();
    writeln!(s, "swap_rate: {}", o.swap_rate).unwrap();
    s.push('\n');
    s
}

pub fn coupled_summary_block(label: &str, o: &CoupledOutcome) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "policy: {label} (coupled against fcfs)").unwrap();
    common_lines(
        &mut s,
        o.n_arrivals,
        o.n_observed,
        o.arrivals_seeing_queue_empty,
        o.arrivals_seeing_system_empty,
    );
    writeln!(s, "fcfs_mean_response: {}", o.fcfs.mean).unwrap();
    writeln!(s, "fcfs_variance_response: {}", o.fcfs.variance).unwrap();
    writeln!(s, "fcfs_mean_queue_wait: {}", o.fcfs.mean_queue_wait).unwrap();
    writeln!(s, "{label}_mean_response: {}", o.nudge.mean).unwrap();
    writeln!(s, "{label}_variance_response: {}", o.nudge.variance).unwrap();
    writeln!(s, "{label}_mean_queue_wait: {}", o.nudge.mean_queue_wait).unwrap();
    writeln!(s, "swaps: {}", o.n_swaps).unwrap();
    writeln!(s, "swap_rate: {}", o.swap_rate).unwrap();
    s.push('\n');
    s
}

/// FCFS-only artifact: per-threshold exceedance probabilities and counts.
pub fn write_tail_csv(o: &SimulationOutcome) -> Result<Vec<u8>, String> {
    let thresholds = o
        .tail_thresholds
        .as_ref()
        .ok_or("internal: tail csv without thresholds")?;
    let counts = o
        .tail_counts
        .as_ref()
        .ok_or("internal: tail csv without counts")?;
    let n = o.n_observed as f64;
    let rows = thresholds
        .iter()
        .zip(counts)
        .map(|(&t, &c)| vec![t, c as f64 / n, c as f64]);
    let mut buf = Vec::new();
    nudgeq::csvio::write_rows(&mut buf, "threshold,tail,count", rows)
        .map_err(|e| e.to_string())?;
    Ok(buf)
}

/// Execute every configured policy and write the artifact bundle:
/// per-policy CSVs, a text summary, and a manifest that pins every input.
pub fn cmd_run(resolved: &Resolved) -> Result<i32, String> {
    with_outputs(&resolved.out_dir, |out| {
        let thresholds = match &resolved.thresholds {
            Some(t) => t.clone(),
            None => derive_thresholds(resolved)?,
        };
        let mut summary = String::new();
        for (i, policy) in resolved.policies.iter().enumerate() {
            eprintln!(
                "[{}/{}] {}: {} arrivals...",
                i + 1,
                resolved.policies.len(),
                policy.label(),
                resolved.n_arrivals
            );
            let cfg = sim_config(resolved, *policy, thresholds.clone());
            if policy.is_nudge_family() {
                let o = coupled_run(&cfg).map_err(fmt_err)?;
                let curve = o.tir_curve().map_err(fmt_err)?;
                let mut buf = Vec::new();
                curve.write_csv(&mut buf).map_err(|e| e.to_string())?;
                out.write(&format!("{}_tir.csv", policy.label()), &buf)
                    .map_err(|e| e.to_string())?;
                summary.push_str(&coupled_summary_block(&policy.label(), &o));
            } else {
                let o = run(&cfg).map_err(fmt_err)?;
                let buf = write_tail_csv(&o)?;
                out.write("fcfs_tail.csv", &buf).map_err(|e| e.to_string())?;
                summary.push_str(&single_summary_block(&policy.label(), &o));
            }
        }
        out.write("summary.txt", summary.as_bytes())
            .map_err(|e| e.to_string())?;
        write_run_manifest(out, resolved, &thresholds)?;
        Ok(0)
    })
}

fn write_run_manifest(
    out: &mut OutputSet,
    resolved: &Resolved,
    thresholds: &[f64],
) -> Result<(), String> {
    let manifest = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "run",
        "distribution": resolved.dist_value,
        "lambda": resolved.lambda,
        "rho": resolved.rho,
        "x1": resolved.params.x1,
        "x2": resolved.params.x2,
        "x3": cutoff_value(resolved.params.x3),
        "policies": resolved.policies.iter().map(|p| p.label()).collect::<Vec<_>>(),
        "n_arrivals": resolved.n_arrivals,
        "seed": resolved.seed,
        "replications": resolved.replications,
        "thresholds": thresholds,
        "outputs": out.names(),
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    out.write("manifest.json", text.as_bytes())
        .map_err(|e| e.to_string())
}

//! Discrete-event M/G/1 simulation of FCFS, nudge, and its variants.
//!
//! [`run`] simulates one policy and reports response-time statistics.
//! [`coupled_run`] feeds the identical arrival and size streams to FCFS
//! and a nudge-family policy at once, yielding per-job response-time
//! relations, exact threshold tail counts for both, and the counts of the
//! per-threshold increase/decrease events a swap causes — everything
//! needed for tail-improvement curves ([`TirCurve`]) with confidence
//! bands.
//!
//! Replications run in parallel (capped by the `NUDGEQ_THREADS`
//! environment variable, read once per process) and merge in replication
//! order, so results are bit-identical for a given config and seed no
//! matter the thread schedule.

mod engine;
pub mod stats;

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dist::JobDist;
use crate::error::{Error, Result};
use crate::nudge::{JobClass, NudgeParams};
pub use stats::{binomial_ci, empirical_lst, tail_ratio_ci, LogHistogram, LstEstimate, Welford};

use engine::{EngineSetup, RepOutput, SideStats};

/// Bins in the response-time histogram.
const HISTOGRAM_BINS: usize = 10_000;
/// Histogram upper edge as a multiple of the mean job size.
const HISTOGRAM_SPAN_MEANS: f64 = 200.0;
/// Tail counts below this are flagged low-confidence.
const LOW_CONFIDENCE_TAIL: u64 = 100;

/// Scheduling policy for a simulation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Policy {
    Fcfs,
    Nudge(NudgeParams),
    /// Nudge, except a large job may be passed by up to `k` distinct small
    /// arrivals (small jobs still swap at most once).
    NudgeBudget { params: NudgeParams, k: u32 },
    /// Nudge, except an eligible swap fires with independent probability
    /// `p`.
    NudgeProb { params: NudgeParams, p: f64 },
}

impl Policy {
    pub fn params(&self) -> Option<&NudgeParams> {
        match self {
            Policy::Fcfs => None,
            Policy::Nudge(p) => Some(p),
            Policy::NudgeBudget { params, .. } => Some(params),
            Policy::NudgeProb { params, .. } => Some(params),
        }
    }

    pub fn is_nudge_family(&self) -> bool {
        !matches!(self, Policy::Fcfs)
    }

    /// Short label for file names and report headings.
    pub fn label(&self) -> String {
        match self {
            Policy::Fcfs => "fcfs".into(),
            Policy::Nudge(_) => "nudge".into(),
            Policy::NudgeBudget { k, .. } => format!("nudge_budget_{k}"),
            Policy::NudgeProb { p, .. } => format!("nudge_prob_{p}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Policy::Fcfs | Policy::Nudge(_) => Ok(()),
            Policy::NudgeBudget { k, .. } => {
                if *k >= 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "swap budget k must be at least 1".into(),
                    ))
                }
            }
            Policy::NudgeProb { p, .. } => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "swap probability {p} must lie in [0, 1]"
                    )))
                }
            }
        }
    }
}

/// What happened to a job relative to its FCFS schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapDirection {
    Unswapped,
    /// Small job that jumped ahead of a large one: response shrank by the
    /// partner's size.
    Ahead,
    /// Large job that was passed: response grew by the partners' total
    /// size.
    Behind,
}

/// Per-job record from a coupled run.
#[derive(Clone, Copy, Debug)]
pub struct JobRecord {
    pub arrival_index: u64,
    pub t_fcfs: f64,
    pub t_nudge: f64,
    pub wait_fcfs: f64,
    pub wait_nudge: f64,
    pub size: f64,
    pub class: JobClass,
    /// Total size of all partners this job swapped with (0 if none).
    pub partner_total: f64,
    pub n_partners: u32,
    pub direction: SwapDirection,
    /// Arrival index of the most recent partner.
    pub partner_index: Option<u64>,
}

/// Full specification of a simulation experiment.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub lambda: f64,
    pub dist: JobDist,
    pub policy: Policy,
    /// Total arrivals across all replications.
    pub n_arrivals: u64,
    /// Warm-up arrivals discarded per replication; `None` uses
    /// [`default_warmup`].
    pub warmup: Option<u64>,
    pub seed: u64,
    pub replications: u32,
    /// Probe points for the empirical response-time transform.
    pub lst_probes: Vec<f64>,
    /// Probe points for per-class (small/large) queueing-time transforms.
    pub class_lst_probes: Vec<f64>,
    /// Ascending thresholds for exact tail counting.
    pub thresholds: Option<Vec<f64>>,
    /// Keep raw response-time samples (subject to `raw_sample_cap`).
    pub keep_raw: bool,
    /// Raw samples are dropped entirely when the post-warmup job count
    /// exceeds this.
    pub raw_sample_cap: u64,
    /// Keep per-job records in coupled runs (subject to `record_cap`).
    pub keep_records: bool,
    pub record_cap: u64,
}

impl SimConfig {
    pub fn new(lambda: f64, dist: JobDist, policy: Policy) -> Self {
        SimConfig {
            lambda,
            dist,
            policy,
            n_arrivals: 1_000_000,
            warmup: None,
            seed: 1,
            replications: 1,
            lst_probes: Vec::new(),
            class_lst_probes: Vec::new(),
            thresholds: None,
            keep_raw: false,
            raw_sample_cap: 100_000_000,
            keep_records: false,
            record_cap: 2_000_000,
        }
    }
}

/// Default warm-up for a replication of `n` arrivals:
/// `max(100_000, n/100)`, but never more than half the replication.
pub fn default_warmup(n: u64) -> u64 {
    (100_000).max(n / 100).min(n / 2)
}

/// Statistics from a single-policy run.
#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub n_arrivals: u64,
    pub n_observed: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub max: f64,
    pub mean_queue_wait: f64,
    pub queue_wait_std_error: f64,
    pub histogram: LogHistogram,
    pub lst_probes: Vec<LstEstimate>,
    /// Queueing-time transform probes over small-class jobs.
    pub small_wait_lst: Vec<LstEstimate>,
    /// Queueing-time transform probes over large-class jobs.
    pub large_wait_lst: Vec<LstEstimate>,
    /// Raw post-warmup response times in service order, when requested and
    /// under the cap.
    pub raw: Option<Vec<f64>>,
    pub tail_thresholds: Option<Vec<f64>>,
    /// Exact counts of post-warmup responses exceeding each threshold.
    pub tail_counts: Option<Vec<u64>>,
    pub n_swaps: u64,
    /// Swaps per post-warmup arrival.
    pub swap_rate: f64,
    pub arrivals_seeing_queue_empty: u64,
    pub arrivals_seeing_system_empty: u64,
}

/// Summary of one side of a coupled run.
#[derive(Clone, Copy, Debug)]
pub struct PolicySummary {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub max: f64,
    pub mean_queue_wait: f64,
}

fn summarize(side: &SideStats) -> PolicySummary {
    PolicySummary {
        mean: side.resp.mean(),
        variance: side.resp.variance(),
        std_error: side.resp.std_error(),
        max: side.resp.max(),
        mean_queue_wait: side.wait.mean(),
    }
}

/// Everything a coupled FCFS/nudge run measures.
#[derive(Clone, Debug)]
pub struct CoupledOutcome {
    pub n_arrivals: u64,
    pub n_observed: u64,
    pub fcfs: PolicySummary,
    pub nudge: PolicySummary,
    pub thresholds: Vec<f64>,
    /// Per threshold: post-warmup jobs with `T_fcfs > t`.
    pub tail_fcfs: Vec<u64>,
    /// Per threshold: post-warmup jobs with `T_nudge > t`.
    pub tail_nudge: Vec<u64>,
    /// Per threshold: swap pushed a job's response above `t`
    /// (`T_fcfs ≤ t < T_nudge`).
    pub i_counts: Vec<u64>,
    /// Per threshold: swap pulled a job's response below `t`
    /// (`T_nudge ≤ t < T_fcfs`).
    pub d_counts: Vec<u64>,
    /// Per threshold: jobs above `t` in both systems (for correlated CI).
    pub joint_counts: Vec<u64>,
    pub fcfs_histogram: LogHistogram,
    pub nudge_histogram: LogHistogram,
    pub fcfs_lst_probes: Vec<LstEstimate>,
    pub nudge_lst_probes: Vec<LstEstimate>,
    /// Nudge-side queueing-time transform probes per class.
    pub small_wait_lst: Vec<LstEstimate>,
    pub large_wait_lst: Vec<LstEstimate>,
    pub n_swaps: u64,
    pub swap_rate: f64,
    pub arrivals_seeing_queue_empty: u64,
    pub arrivals_seeing_system_empty: u64,
    pub records: Option<Vec<JobRecord>>,
}

impl CoupledOutcome {
    /// Tail-improvement curve with 95% bands from this run's exact counts.
    pub fn tir_curve(&self) -> Result<TirCurve> {
        TirCurve::from_counts(
            self.thresholds.clone(),
            &self.tail_fcfs,
            &self.tail_nudge,
            Some(&self.joint_counts),
            self.n_observed,
        )
    }
}

/// Empirical tail-improvement-ratio curve: `tir = 1 − tail_nudge/tail_fcfs`
/// per threshold, with 95% confidence bands. Entries are `None` where the
/// FCFS tail is empty (the ratio is undefined there).
#[derive(Clone, Debug)]
pub struct TirCurve {
    pub thresholds: Vec<f64>,
    pub tail_fcfs: Vec<f64>,
    pub tail_nudge: Vec<f64>,
    pub tir: Vec<Option<f64>>,
    pub ci_low: Vec<Option<f64>>,
    pub ci_high: Vec<Option<f64>>,
    pub n_tail_fcfs: Vec<u64>,
    pub n_tail_nudge: Vec<u64>,
    /// Either tail count below 100 at this threshold.
    pub low_confidence: Vec<bool>,
    pub n: u64,
}

impl TirCurve {
    /// Build from exact tail counts out of `n` observations. `joint`
    /// carries `#{both tails}` when the two columns come from one coupled
    /// run (tightens the bands via the covariance term); pass `None` for
    /// independent runs.
    pub fn from_counts(
        thresholds: Vec<f64>,
        tail_fcfs: &[u64],
        tail_nudge: &[u64],
        joint: Option<&[u64]>,
        n: u64,
    ) -> Result<Self> {
        let m = thresholds.len();
        if tail_fcfs.len() != m || tail_nudge.len() != m {
            return Err(Error::InvalidParameter(
                "tail count arrays must match the threshold grid".into(),
            ));
        }
        if let Some(j) = joint {
            if j.len() != m {
                return Err(Error::InvalidParameter(
                    "joint count array must match the threshold grid".into(),
                ));
            }
        }
        for w in tail_fcfs.windows(2) {
            if w[1] > w[0] {
                return Err(Error::Inconsistency(
                    "FCFS tail counts must be non-increasing in the threshold".into(),
                ));
            }
        }
        for w in tail_nudge.windows(2) {
            if w[1] > w[0] {
                return Err(Error::Inconsistency(
                    "nudge tail counts must be non-increasing in the threshold".into(),
                ));
            }
        }
        let nf = n as f64;
        let mut curve = TirCurve {
            thresholds,
            tail_fcfs: tail_fcfs.iter().map(|&c| c as f64 / nf).collect(),
            tail_nudge: tail_nudge.iter().map(|&c| c as f64 / nf).collect(),
            tir: Vec::with_capacity(m),
            ci_low: Vec::with_capacity(m),
            ci_high: Vec::with_capacity(m),
            n_tail_fcfs: tail_fcfs.to_vec(),
            n_tail_nudge: tail_nudge.to_vec(),
            low_confidence: Vec::with_capacity(m),
            n,
        };
        for i in 0..m {
            let j = joint.map(|j| j[i]);
            match stats::tail_ratio_ci(tail_nudge[i], tail_fcfs[i], j, n) {
                Some((ratio, r_lo, r_hi)) => {
                    curve.tir.push(Some(1.0 - ratio));
                    // The TIR interval flips the ratio interval.
                    curve.ci_low.push(Some(1.0 - r_hi));
                    curve.ci_high.push(Some(1.0 - r_lo));
                }
                None => {
                    curve.tir.push(None);
                    curve.ci_low.push(None);
                    curve.ci_high.push(None);
                }
            }
            curve
                .low_confidence
                .push(tail_fcfs[i] < LOW_CONFIDENCE_TAIL || tail_nudge[i] < LOW_CONFIDENCE_TAIL);
        }
        Ok(curve)
    }

    /// CSV rows with the fixed schema
    /// `threshold,tail_fcfs,tail_nudge,tir,ci_low,ci_high,n_tail_fcfs,n_tail_nudge`.
    /// Undefined TIR entries render as `nan`; consumers must treat those
    /// rows as unmeasured, not as numbers.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let rows = (0..self.thresholds.len()).map(|i| {
            vec![
                self.thresholds[i],
                self.tail_fcfs[i],
                self.tail_nudge[i],
                self.tir[i].unwrap_or(f64::NAN),
                self.ci_low[i].unwrap_or(f64::NAN),
                self.ci_high[i].unwrap_or(f64::NAN),
                self.n_tail_fcfs[i] as f64,
                self.n_tail_nudge[i] as f64,
            ]
        });
        crate::csvio::write_rows(
            out,
            "threshold,tail_fcfs,tail_nudge,tir,ci_low,ci_high,n_tail_fcfs,n_tail_nudge",
            rows,
        )
    }
}

/// Shared worker pool; size taken from `NUDGEQ_THREADS` once per process.
fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var("NUDGEQ_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1)
        {
            builder = builder.num_threads(n);
        }
        builder.build().expect("worker pool construction")
    })
}

struct ResolvedPlan {
    rep_arrivals: Vec<u64>,
    rep_warmups: Vec<u64>,
    total_observed: u64,
    hist_lo: f64,
    hist_hi: f64,
    thresholds: Vec<f64>,
}

fn resolve(config: &SimConfig, need_thresholds: bool) -> Result<ResolvedPlan> {
    if !(config.lambda.is_finite() && config.lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "arrival rate {} must be positive and finite",
            config.lambda
        )));
    }
    let rho = config.lambda * config.dist.mean();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    config.policy.validate()?;
    if config.replications < 1 {
        return Err(Error::InvalidParameter(
            "need at least one replication".into(),
        ));
    }
    let reps = config.replications as u64;
    if config.n_arrivals < reps {
        return Err(Error::InvalidParameter(format!(
            "{} arrivals cannot be split across {reps} replications",
            config.n_arrivals
        )));
    }
    let base = config.n_arrivals / reps;
    let extra = config.n_arrivals % reps;
    let rep_arrivals: Vec<u64> = (0..reps).map(|r| base + u64::from(r < extra)).collect();
    let mut rep_warmups = Vec::with_capacity(rep_arrivals.len());
    for &n in &rep_arrivals {
        let w = match config.warmup {
            Some(w) => {
                if w >= n {
                    return Err(Error::InvalidParameter(format!(
                        "warmup {w} must be smaller than the {n} arrivals of each replication"
                    )));
                }
                w
            }
            None => default_warmup(n),
        };
        rep_warmups.push(w);
    }
    let total_observed: u64 = rep_arrivals
        .iter()
        .zip(&rep_warmups)
        .map(|(n, w)| n - w)
        .sum();

    for &s in config.lst_probes.iter().chain(&config.class_lst_probes) {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transform probe point {s} must be nonnegative and finite"
            )));
        }
    }
    let thresholds = match &config.thresholds {
        Some(t) => {
            for w in t.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::InvalidParameter(
                        "thresholds must be strictly increasing".into(),
                    ));
                }
            }
            if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(
                    "thresholds must be finite and nonnegative".into(),
                ));
            }
            t.clone()
        }
        None if need_thresholds => {
            return Err(Error::InvalidParameter(
                "a coupled run needs a threshold grid for its tail counts".into(),
            ));
        }
        None => Vec::new(),
    };

    let mean = config.dist.mean();
    let hist_lo = config.dist.s_min().max(mean * 1e-3);
    let hist_hi = HISTOGRAM_SPAN_MEANS * mean;
    Ok(ResolvedPlan {
        rep_arrivals,
        rep_warmups,
        total_observed,
        hist_lo,
        hist_hi,
        thresholds,
    })
}

fn run_replications(
    config: &SimConfig,
    plan: &ResolvedPlan,
    coupled: bool,
    keep_raw: bool,
    keep_records: bool,
) -> Result<Vec<RepOutput>> {
    pool().install(|| {
        (0..plan.rep_arrivals.len())
            .into_par_iter()
            .map(|r| {
                engine::simulate_replication(&EngineSetup {
                    lambda: config.lambda,
                    dist: &config.dist,
                    policy: config.policy,
                    n: plan.rep_arrivals[r],
                    warmup: plan.rep_warmups[r],
                    seed: config.seed,
                    replication: r as u64,
                    lst_probes: &config.lst_probes,
                    class_lst_probes: &config.class_lst_probes,
                    thresholds: &plan.thresholds,
                    keep_raw,
                    keep_records,
                    coupled,
                    hist_lo: plan.hist_lo,
                    hist_hi: plan.hist_hi,
                    hist_bins: HISTOGRAM_BINS,
                })
            })
            .collect::<Result<Vec<_>>>()
    })
}

struct Merged {
    primary: SideStats,
    fcfs: Option<SideStats>,
    n_arrivals: u64,
    n_observed: u64,
    swaps: u64,
    queue_empty: u64,
    system_empty: u64,
    i_counts: Vec<u64>,
    d_counts: Vec<u64>,
    joint_counts: Vec<u64>,
    records: Vec<JobRecord>,
}

fn merge_reps(mut reps: Vec<RepOutput>) -> Result<Merged> {
    let first = reps.remove(0);
    let mut merged = Merged {
        primary: first.primary,
        fcfs: first.fcfs,
        n_arrivals: first.n_arrivals,
        n_observed: first.n_observed,
        swaps: first.swaps,
        queue_empty: first.queue_empty_seen,
        system_empty: first.system_empty_seen,
        i_counts: first.i_tail,
        d_counts: first.d_tail,
        joint_counts: first.joint_tail,
        records: first.records,
    };
    for rep in &reps {
        merged.primary.merge(&rep.primary)?;
        match (&mut merged.fcfs, &rep.fcfs) {
            (Some(a), Some(b)) => a.merge(b)?,
            (None, None) => {}
            _ => {
                return Err(Error::Inconsistency(
                    "replications disagree about coupled mode".into(),
                ))
            }
        }
        merged.n_arrivals += rep.n_arrivals;
        merged.n_observed += rep.n_observed;
        merged.swaps += rep.swaps;
        merged.queue_empty += rep.queue_empty_seen;
        merged.system_empty += rep.system_empty_seen;
        for (a, b) in merged.i_counts.iter_mut().zip(&rep.i_tail) {
            *a += b;
        }
        for (a, b) in merged.d_counts.iter_mut().zip(&rep.d_tail) {
            *a += b;
        }
        for (a, b) in merged.joint_counts.iter_mut().zip(&rep.joint_tail) {
            *a += b;
        }
        merged.records.extend_from_slice(&rep.records);
    }
    Ok(merged)
}

/// Simulate the configured policy and return its statistics.
pub fn run(config: &SimConfig) -> Result<SimulationOutcome> {
    let plan = resolve(config, false)?;
    let keep_raw = config.keep_raw && plan.total_observed <= config.raw_sample_cap;
    let reps = run_replications(config, &plan, false, keep_raw, false)?;
    let mut merged = merge_reps(reps)?;
    let raw = if keep_raw {
        Some(std::mem::take(&mut merged.primary.raw))
    } else {
        None
    };

    Ok(SimulationOutcome {
        n_arrivals: merged.n_arrivals,
        n_observed: merged.n_observed,
        mean: merged.primary.resp.mean(),
        variance: merged.primary.resp.variance(),
        std_error: merged.primary.resp.std_error(),
        max: merged.primary.resp.max(),
        mean_queue_wait: merged.primary.wait.mean(),
        queue_wait_std_error: merged.primary.wait.std_error(),
        lst_probes: merged.primary.probes.iter().map(LstEstimate::from).collect(),
        small_wait_lst: merged
            .primary
            .small_wait_probes
            .iter()
            .map(LstEstimate::from)
            .collect(),
        large_wait_lst: merged
            .primary
            .large_wait_probes
            .iter()
            .map(LstEstimate::from)
            .collect(),
        raw,
        tail_thresholds: if plan.thresholds.is_empty() {
            None
        } else {
            Some(plan.thresholds)
        },
        tail_counts: if merged.primary.tails.is_empty() {
            None
        } else {
            Some(merged.primary.tails)
        },
        histogram: merged.primary.hist,
        n_swaps: merged.swaps,
        swap_rate: merged.swaps as f64 / merged.n_observed as f64,
        arrivals_seeing_queue_empty: merged.queue_empty,
        arrivals_seeing_system_empty: merged.system_empty,
    })
}

/// Drive FCFS and the configured nudge-family policy with one shared
/// arrival/size stream and measure both, including per-threshold swap
/// increase/decrease events. Requires `config.thresholds`.
pub fn coupled_run(config: &SimConfig) -> Result<CoupledOutcome> {
    if !config.policy.is_nudge_family() {
        return Err(Error::InvalidParameter(
            "a coupled run compares FCFS against a nudge-family policy; \
             got the FCFS policy itself"
                .into(),
        ));
    }
    let plan = resolve(config, true)?;
    let keep_records = config.keep_records && plan.total_observed <= config.record_cap;
    let reps = run_replications(config, &plan, true, false, keep_records)?;
    let merged = merge_reps(reps)?;
    let fcfs = merged
        .fcfs
        .as_ref()
        .ok_or_else(|| Error::Inconsistency("coupled run lost its FCFS side".into()))?;

    // The per-job accounting identity, summed: for every threshold,
    // N{T_nudge > t} − N{T_fcfs > t} = N{increase} − N{decrease}.
    for i in 0..plan.thresholds.len() {
        let lhs = merged.primary.tails[i] as i64 - fcfs.tails[i] as i64;
        let rhs = merged.i_counts[i] as i64 - merged.d_counts[i] as i64;
        if lhs != rhs {
            return Err(Error::Inconsistency(format!(
                "tail accounting identity broke at threshold {}: \
                 tail difference {lhs}, event difference {rhs}",
                plan.thresholds[i]
            )));
        }
    }

    Ok(CoupledOutcome {
        n_arrivals: merged.n_arrivals,
        n_observed: merged.n_observed,
        fcfs: summarize(fcfs),
        nudge: summarize(&merged.primary),
        thresholds: plan.thresholds,
        tail_fcfs: fcfs.tails.clone(),
        tail_nudge: merged.primary.tails.clone(),
        i_counts: merged.i_counts,
        d_counts: merged.d_counts,
        joint_counts: merged.joint_counts,
        fcfs_histogram: fcfs.hist.clone(),
        nudge_histogram: merged.primary.hist.clone(),
        fcfs_lst_probes: fcfs.probes.iter().map(LstEstimate::from).collect(),
        nudge_lst_probes: merged.primary.probes.iter().map(LstEstimate::from).collect(),
        small_wait_lst: merged
            .primary
            .small_wait_probes
            .iter()
            .map(LstEstimate::from)
            .collect(),
        large_wait_lst: merged
            .primary
            .large_wait_probes
            .iter()
            .map(LstEstimate::from)
            .collect(),
        n_swaps: merged.swaps,
        swap_rate: merged.swaps as f64 / merged.n_observed as f64,
        arrivals_seeing_queue_empty: merged.queue_empty,
        arrivals_seeing_system_empty: merged.system_empty,
        records: if keep_records {
            Some(merged.records)
        } else {
            None
        },
    })
}

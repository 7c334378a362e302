//! Single-replication event core.
//!
//! One pass over the arrival stream drives both systems at once. The FCFS
//! side is the Lindley recursion on the workload `W` (drift-free: only
//! differences of locally small numbers). The nudge side is an explicit
//! queue whose entries carry *relative* time-to-service-start, advanced by
//! each interarrival; this keeps the structural "is the previous arrival
//! still waiting" test bit-for-bit equivalent to the FCFS-side predicate
//! `A ≤ W` (a single floating-point subtraction is sign-exact), so the two
//! independent swap-decision routes can be compared with zero tolerance.

use std::collections::VecDeque;

use rand::Rng;

use super::stats::{LogHistogram, ProbeAcc, Welford};
use super::{JobRecord, Policy, SwapDirection};
use crate::dist::JobDist;
use crate::error::{Error, Result};
use crate::nudge::JobClass;
use crate::rng::{self, exp_draw};

/// Number of epochs at which the nudge queue's work content is re-summed
/// and compared against the shared workload.
const WORK_CHECK_EPOCHS: u64 = 1000;
/// Relative tolerance for that re-summation (floating-point accumulation
/// over the queue).
const WORK_CHECK_TOL: f64 = 1e-8;

pub(super) struct EngineSetup<'a> {
    pub lambda: f64,
    pub dist: &'a JobDist,
    pub policy: Policy,
    /// Arrivals in this replication.
    pub n: u64,
    /// Initial arrivals discarded from statistics.
    pub warmup: u64,
    pub seed: u64,
    pub replication: u64,
    pub lst_probes: &'a [f64],
    pub class_lst_probes: &'a [f64],
    /// Ascending thresholds for exact tail counting.
    pub thresholds: &'a [f64],
    pub keep_raw: bool,
    pub keep_records: bool,
    /// Also track the FCFS side and swap events (nudge-family policies).
    pub coupled: bool,
    pub hist_lo: f64,
    pub hist_hi: f64,
    pub hist_bins: usize,
}

/// Statistics for one policy's view of the run.
pub(super) struct SideStats {
    pub resp: Welford,
    pub wait: Welford,
    pub hist: LogHistogram,
    pub probes: Vec<ProbeAcc>,
    pub small_wait_probes: Vec<ProbeAcc>,
    pub large_wait_probes: Vec<ProbeAcc>,
    pub raw: Vec<f64>,
    tail_diff: Vec<i64>,
    pub tails: Vec<u64>,
}

impl SideStats {
    fn new(setup: &EngineSetup) -> Result<Self> {
        Ok(SideStats {
            resp: Welford::default(),
            wait: Welford::default(),
            hist: LogHistogram::new(setup.hist_lo, setup.hist_hi, setup.hist_bins)?,
            probes: setup.lst_probes.iter().map(|&s| ProbeAcc::new(s)).collect(),
            small_wait_probes: setup
                .class_lst_probes
                .iter()
                .map(|&s| ProbeAcc::new(s))
                .collect(),
            large_wait_probes: setup
                .class_lst_probes
                .iter()
                .map(|&s| ProbeAcc::new(s))
                .collect(),
            raw: Vec::new(),
            tail_diff: vec![0; setup.thresholds.len() + 1],
            tails: Vec::new(),
        })
    }

    #[inline]
    fn record(
        &mut self,
        resp: f64,
        wait: f64,
        class: JobClass,
        keep_raw: bool,
        thresholds: &[f64],
    ) {
        self.resp.push(resp);
        self.wait.push(wait);
        self.hist.record(resp);
        for p in &mut self.probes {
            p.push(resp);
        }
        match class {
            JobClass::Small => {
                for p in &mut self.small_wait_probes {
                    p.push(wait);
                }
            }
            JobClass::Large => {
                for p in &mut self.large_wait_probes {
                    p.push(wait);
                }
            }
            _ => {}
        }
        if keep_raw {
            self.raw.push(resp);
        }
        if !thresholds.is_empty() {
            let idx = thresholds.partition_point(|&t| t < resp);
            self.tail_diff[0] += 1;
            self.tail_diff[idx] -= 1;
        }
    }

    fn finalize(&mut self) {
        self.tails = prefix_counts(&self.tail_diff);
    }

    pub fn merge(&mut self, other: &SideStats) -> Result<()> {
        self.resp.merge(&other.resp);
        self.wait.merge(&other.wait);
        self.hist.merge(&other.hist)?;
        for (a, b) in self.probes.iter_mut().zip(&other.probes) {
            a.merge(b);
        }
        for (a, b) in self.small_wait_probes.iter_mut().zip(&other.small_wait_probes) {
            a.merge(b);
        }
        for (a, b) in self.large_wait_probes.iter_mut().zip(&other.large_wait_probes) {
            a.merge(b);
        }
        self.raw.extend_from_slice(&other.raw);
        for (a, b) in self.tails.iter_mut().zip(&other.tails) {
            *a += b;
        }
        Ok(())
    }
}

/// Turn a difference array (range increments) into cumulative counts per
/// threshold.
fn prefix_counts(diff: &[i64]) -> Vec<u64> {
    let m = diff.len() - 1;
    let mut out = Vec::with_capacity(m);
    let mut acc = 0i64;
    for &d in &diff[..m] {
        acc += d;
        debug_assert!(acc >= 0);
        out.push(acc as u64);
    }
    out
}

pub(super) struct RepOutput {
    pub primary: SideStats,
    pub fcfs: Option<SideStats>,
    pub n_arrivals: u64,
    pub n_observed: u64,
    pub swaps: u64,
    pub queue_empty_seen: u64,
    pub system_empty_seen: u64,
    pub i_tail: Vec<u64>,
    pub d_tail: Vec<u64>,
    pub joint_tail: Vec<u64>,
    pub records: Vec<JobRecord>,
}

/// One queued (not yet in service) job in the nudge system.
struct QueuedJob {
    /// Time until service start, relative to "now"; ≥ 0 while queued.
    remaining: f64,
    size: f64,
    class: JobClass,
    /// How many small jobs have swapped ahead of this one.
    passes: u32,
    arrival_index: u64,
    t_f: f64,
    t_n: f64,
    wait_f: f64,
    wait_n: f64,
    partner_total: f64,
    n_partners: u32,
    direction: SwapDirection,
    partner_index: u64,
}

pub(super) fn simulate_replication(setup: &EngineSetup) -> Result<RepOutput> {
    let params = setup.policy.params().copied();
    let nudge_family = setup.policy.is_nudge_family();
    let (swap_budget, is_prob, swap_p) = match setup.policy {
        Policy::Fcfs => (0u32, false, 0.0),
        Policy::Nudge(_) => (1, false, 0.0),
        Policy::NudgeBudget { k, .. } => (k, false, 0.0),
        Policy::NudgeProb { p, .. } => (1, true, p),
    };

    let mut arr_rng = rng::stream(setup.seed, setup.replication, rng::CH_ARRIVALS);
    let mut size_rng = rng::stream(setup.seed, setup.replication, rng::CH_SIZES);
    let mut policy_rng = rng::stream(setup.seed, setup.replication, rng::CH_POLICY);

    let mut primary = SideStats::new(setup)?;
    let mut fcfs_side = if setup.coupled {
        Some(SideStats::new(setup)?)
    } else {
        None
    };
    let m = setup.thresholds.len();
    let (mut i_diff, mut d_diff, mut joint_diff) = if setup.coupled {
        (vec![0i64; m + 1], vec![0i64; m + 1], vec![0i64; m + 1])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let mut records: Vec<JobRecord> = Vec::new();

    let mut deque: VecDeque<QueuedJob> = VecDeque::new();
    // Workload (unfinished work in the system) seen by the current arrival.
    let mut w = 0.0f64;
    // Time until the nudge server finishes its current job, for work
    // re-summation checks only.
    let mut server_remnant = 0.0f64;
    let mut prev_w = 0.0f64;
    let mut prev_size = 0.0f64;
    let mut prev_class = JobClass::Medium;
    let mut last_a = 0.0f64;

    let mut swaps = 0u64;
    let mut queue_empty_seen = 0u64;
    let mut system_empty_seen = 0u64;

    let epoch_stride = (setup.n / WORK_CHECK_EPOCHS).max(1);

    // Shared finalizer for a job leaving the queue (or flushed at the end).
    macro_rules! finish_job {
        ($job:expr) => {{
            let job = $job;
            if job.arrival_index >= setup.warmup {
                primary.record(
                    job.t_n,
                    job.wait_n,
                    job.class,
                    setup.keep_raw,
                    setup.thresholds,
                );
                if let Some(f) = fcfs_side.as_mut() {
                    f.record(job.t_f, job.wait_f, job.class, setup.keep_raw, setup.thresholds);
                }
                if setup.coupled && m > 0 {
                    match job.direction {
                        SwapDirection::Behind => {
                            let lo = setup.thresholds.partition_point(|&t| t < job.t_f);
                            let hi = setup.thresholds.partition_point(|&t| t < job.t_n);
                            i_diff[lo] += 1;
                            i_diff[hi] -= 1;
                        }
                        SwapDirection::Ahead => {
                            let lo = setup.thresholds.partition_point(|&t| t < job.t_n);
                            let hi = setup.thresholds.partition_point(|&t| t < job.t_f);
                            d_diff[lo] += 1;
                            d_diff[hi] -= 1;
                        }
                        SwapDirection::Unswapped => {}
                    }
                    let both = job.t_f.min(job.t_n);
                    let idx = setup.thresholds.partition_point(|&t| t < both);
                    joint_diff[0] += 1;
                    joint_diff[idx] -= 1;
                }
                if setup.keep_records {
                    records.push(JobRecord {
                        arrival_index: job.arrival_index,
                        t_fcfs: job.t_f,
                        t_nudge: job.t_n,
                        wait_fcfs: job.wait_f,
                        wait_nudge: job.wait_n,
                        size: job.size,
                        class: job.class,
                        partner_total: job.partner_total,
                        n_partners: job.n_partners,
                        direction: job.direction,
                        partner_index: if job.n_partners > 0 {
                            Some(job.partner_index)
                        } else {
                            None
                        },
                    });
                }
            }
        }};
    }

    for i in 0..setup.n {
        if i > 0 {
            let a = exp_draw(&mut arr_rng, setup.lambda);
            last_a = a;
            // FCFS workload seen by arrival i.
            w = (prev_w + prev_size - a).max(0.0);
            // Advance the nudge queue by the elapsed interarrival and move
            // jobs whose service has started out of it.
            for job in deque.iter_mut() {
                job.remaining -= a;
            }
            server_remnant = (server_remnant - a).max(0.0);
            while deque.front().is_some_and(|f| f.remaining < 0.0) {
                let job = deque.pop_front().expect("nonempty");
                server_remnant = (job.remaining + job.size).max(0.0);
                finish_job!(job);
            }
        }

        // Structural consistency: zero workload means an empty system.
        if w == 0.0 && !deque.is_empty() {
            return Err(Error::Inconsistency(format!(
                "workload hit zero at arrival {i} with {} jobs still queued",
                deque.len()
            )));
        }
        if i % epoch_stride == 0 {
            let queued: f64 = deque.iter().map(|j| j.size).sum();
            let resummed = server_remnant + queued;
            if (resummed - w).abs() > WORK_CHECK_TOL * w.abs().max(1.0) {
                return Err(Error::Inconsistency(format!(
                    "work conservation broke at arrival {i}: queue holds {resummed}, \
                     workload recursion says {w}"
                )));
            }
        }

        if i >= setup.warmup {
            if deque.is_empty() {
                queue_empty_seen += 1;
            }
            if w == 0.0 {
                system_empty_seen += 1;
            }
        }

        let size = setup.dist.sample(&mut size_rng);
        let class = params.map_or(JobClass::Medium, |p| p.classify(size));

        // Structural swap decision from the live queue state.
        let structural = nudge_family
            && class == JobClass::Small
            && deque
                .back()
                .is_some_and(|b| b.class == JobClass::Large && b.passes < swap_budget);
        let swap_fired = if structural {
            if is_prob {
                policy_rng.random::<f64>() < swap_p
            } else {
                true
            }
        } else {
            false
        };

        // Independent route: the swap predicate on FCFS-side quantities.
        // For single-swap policies the structural conditions must agree
        // with it exactly; with a swap budget the predicate still forces a
        // swap opportunity (a first pass is always allowed).
        if nudge_family && i > 0 {
            let predicate = prev_class == JobClass::Large
                && class == JobClass::Small
                && last_a <= prev_w;
            let consistent = match setup.policy {
                Policy::Nudge(_) | Policy::NudgeProb { .. } => structural == predicate,
                Policy::NudgeBudget { .. } => !predicate || structural,
                Policy::Fcfs => unreachable!(),
            };
            if !consistent {
                return Err(Error::Inconsistency(format!(
                    "swap routes disagree at arrival {i}: queue state says {structural}, \
                     workload predicate says {predicate}"
                )));
            }
        }

        let t_f = w + size;
        if swap_fired {
            if i >= setup.warmup {
                swaps += 1;
            }
            let back = deque.back_mut().expect("structural requires a back job");
            let my_remaining = back.remaining;
            let partner_size = back.size;
            let partner_index = back.arrival_index;
            back.remaining += size;
            back.t_n += size;
            back.wait_n += size;
            back.partner_total += size;
            back.passes += 1;
            back.n_partners += 1;
            back.direction = SwapDirection::Behind;
            back.partner_index = i;
            let job = QueuedJob {
                remaining: my_remaining,
                size,
                class,
                passes: 0,
                arrival_index: i,
                t_f,
                t_n: t_f - partner_size,
                wait_f: w,
                wait_n: w - partner_size,
                partner_total: partner_size,
                n_partners: 1,
                direction: SwapDirection::Ahead,
                partner_index,
            };
            let pos = deque.len() - 1;
            deque.insert(pos, job);
        } else {
            deque.push_back(QueuedJob {
                remaining: w,
                size,
                class,
                passes: 0,
                arrival_index: i,
                t_f,
                t_n: t_f,
                wait_f: w,
                wait_n: w,
                partner_total: 0.0,
                n_partners: 0,
                direction: SwapDirection::Unswapped,
                partner_index: 0,
            });
        }

        prev_w = w;
        prev_size = size;
        prev_class = class;
    }

    // Everything still queued has its final times (no more arrivals can
    // swap); flush in service order.
    while let Some(job) = deque.pop_front() {
        finish_job!(job);
    }

    primary.finalize();
    if let Some(f) = fcfs_side.as_mut() {
        f.finalize();
    }
    let n_observed = setup.n - setup.warmup;
    if primary.resp.count() != n_observed {
        return Err(Error::Inconsistency(format!(
            "recorded {} jobs, expected {n_observed}",
            primary.resp.count()
        )));
    }

    Ok(RepOutput {
        primary,
        fcfs: fcfs_side,
        n_arrivals: setup.n,
        n_observed,
        swaps,
        queue_empty_seen,
        system_empty_seen,
        i_tail: if setup.coupled {
            prefix_counts(&i_diff)
        } else {
            Vec::new()
        },
        d_tail: if setup.coupled {
            prefix_counts(&d_diff)
        } else {
            Vec::new()
        },
        joint_tail: if setup.coupled {
            prefix_counts(&joint_diff)
        } else {
            Vec::new()
        },
        records,
    })
}

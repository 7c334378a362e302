//! Improvement-regime analysis and exact transforms for nudge scheduling.
//!
//! Nudge partitions jobs by size into small `[0, x1)`, medium `[x1, x2)`,
//! large `[x2, x3)`, and very large `[x3, ∞)` classes. A small arrival may
//! swap ahead of a large job at the back of the queue, once per job. This
//! module answers, analytically:
//!
//! - whether that rule improves every response-time tail probability
//!   ([`check_regime`]) and how to pick cutoffs that provably do
//!   ([`construct_params`]);
//! - the exact asymptotic tail improvement ratio ([`asym_tir`]) and the
//!   resulting nudge tail constant ([`nudge_tail_constant`]);
//! - the exact response-time transform under nudge
//!   ([`nudge_response_lst`]), assembled from per-class queueing-time
//!   transforms ([`small_queueing_lst`], [`large_queueing_lst`]);
//! - analytic bounds on the probabilities that a swap pushes a job's
//!   response time across a threshold ([`swap_overshoot_bounds`]).

use crate::dist::{BandConditioned, JobDist};
use crate::error::{Error, Result};
use crate::fcfs::{decay_rate, FcfsQueue, FcfsTailProfile};
use std::cell::Cell;
use std::fmt::Write as _;

/// Width (relative to `lambda`) of the window around `s = lambda` where the
/// removable singularity in the empty-queue transform is evaluated by series
/// expansion instead of the ratio form.
const Q_SERIES_WINDOW: f64 = 1e-4;
/// Relative tolerance for the nested quadrature in the swap-overshoot
/// expectation terms.
const OVERSHOOT_TOL: f64 = 1e-9;

/// Size-class cutoffs. Small jobs are `[0, x1)`, medium `[x1, x2)`, large
/// `[x2, x3)`, very large `[x3, ∞)`. `x1` must be finite; `x2`, `x3` may be
/// `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NudgeParams {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

/// Size class of a single job under a [`NudgeParams`] partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JobClass {
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl NudgeParams {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        if x1.is_nan() || x2.is_nan() || x3.is_nan() {
            return Err(Error::InvalidParameter(
                "size cutoffs must not be NaN".into(),
            ));
        }
        if !(0.0 <= x1 && x1 <= x2 && x2 <= x3) {
            return Err(Error::InvalidParameter(format!(
                "size cutoffs must satisfy 0 <= x1 <= x2 <= x3, got ({x1}, {x2}, {x3})"
            )));
        }
        if !x1.is_finite() {
            return Err(Error::InvalidParameter(
                "the small-job cutoff x1 must be finite".into(),
            ));
        }
        Ok(NudgeParams { x1, x2, x3 })
    }

    pub fn classify(&self, size: f64) -> JobClass {
        if size < self.x1 {
            JobClass::Small
        } else if size < self.x2 {
            JobClass::Medium
        } else if size < self.x3 {
            JobClass::Large
        } else {
            JobClass::VeryLarge
        }
    }
}

/// The small band `[0, x1)` of `dist`, or [`Error::EmptyBand`] if it carries
/// no mass.
pub fn small_band(params: &NudgeParams, dist: &JobDist) -> Result<BandConditioned> {
    if params.x1 <= 0.0 {
        return Err(Error::EmptyBand {
            name: "small",
            lo: 0.0,
            hi: params.x1,
        });
    }
    dist.condition_to_band(0.0, params.x1, "small")
}

/// The large band `[x2, x3)` of `dist`, or [`Error::EmptyBand`].
pub fn large_band(params: &NudgeParams, dist: &JobDist) -> Result<BandConditioned> {
    if !(params.x3 > params.x2) || !params.x2.is_finite() {
        return Err(Error::EmptyBand {
            name: "large",
            lo: params.x2,
            hi: params.x3,
        });
    }
    dist.condition_to_band(params.x2, params.x3, "large")
}

/// Everything [`check_regime`] establishes about a configuration.
#[derive(Clone, Debug)]
pub struct ImprovementReport {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub lambda: f64,
    pub rho: f64,
    pub theta_star: f64,
    pub p_small: f64,
    pub p_large: f64,
    /// Small-band transform evaluated at `-theta*` (i.e. `E[e^{θ*S} | small]`).
    pub lst_small: f64,
    /// Large-band transform evaluated at `-theta*`.
    pub lst_large: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub g_bounds_estimated: bool,
    /// `(g_max/g_min)·(λ+θ*)/λ`.
    pub condition_ratio_lhs: f64,
    /// `(1 − lst_large⁻¹)/(1 − lst_small⁻¹)`.
    pub condition_ratio_rhs: f64,
    /// Tail-profile condition: `condition_ratio_lhs < condition_ratio_rhs`.
    pub condition_i: bool,
    /// Cutoff-shape condition: `x1 + x3 ≤ 2·x2`.
    pub condition_ii: bool,
    /// Both conditions hold: every tail probability improves, at every
    /// threshold.
    pub stochastic_regime: bool,
    /// The weaker asymptotic test `(λ+θ*)/λ < condition_ratio_rhs`,
    /// equivalent to `asym_tir > 0`.
    pub asym_condition: bool,
    /// Asymptotic tail improvement ratio
    /// `1 − lim P{T_nudge > t}/P{T_fcfs > t}`.
    pub asym_tir: f64,
}

impl ImprovementReport {
    /// Flat `key: value` rendering, one metric per line, for CLI output.
    pub fn to_text_block(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}: {v}").unwrap();
        kv("x1", self.x1.to_string());
        kv("x2", self.x2.to_string());
        kv("x3", self.x3.to_string());
        kv("lambda", self.lambda.to_string());
        kv("rho", self.rho.to_string());
        kv("theta_star", self.theta_star.to_string());
        kv("p_small", self.p_small.to_string());
        kv("p_large", self.p_large.to_string());
        kv("lst_small_at_minus_theta", self.lst_small.to_string());
        kv("lst_large_at_minus_theta", self.lst_large.to_string());
        kv("g_min", self.g_min.to_string());
        kv("g_max", self.g_max.to_string());
        kv("g_bounds_estimated", self.g_bounds_estimated.to_string());
        kv("condition_ratio_lhs", self.condition_ratio_lhs.to_string());
        kv("condition_ratio_rhs", self.condition_ratio_rhs.to_string());
        kv("condition_i", self.condition_i.to_string());
        kv("condition_ii", self.condition_ii.to_string());
        kv("stochastic_regime", self.stochastic_regime.to_string());
        kv("asym_condition", self.asym_condition.to_string());
        kv("asym_tir", self.asym_tir.to_string());
        out
    }
}

/// The asymptotic tail-improvement-ratio formula, given both band
/// transforms evaluated at `-theta*`.
fn asym_tir_from_lsts(
    p_small: f64,
    p_large: f64,
    lst_small: f64,
    lst_large: f64,
    lambda: f64,
    theta: f64,
) -> f64 {
    let lam_frac = lambda / (lambda + theta);
    let theta_frac = theta / (lambda + theta);
    p_small
        * p_large
        * lam_frac
        * (lst_large - lam_frac * lst_small - theta_frac * lst_large * lst_small)
}

/// Decide whether `params` put the queue in the improvement regime.
///
/// `profile` must come from the same `(lambda, dist)` pair; this is
/// cross-checked. Errors with [`Error::EmptyBand`] if either the small or
/// the large band carries no probability mass.
pub fn check_regime(
    params: &NudgeParams,
    profile: &FcfsTailProfile,
    dist: &JobDist,
    lambda: f64,
) -> Result<ImprovementReport> {
    if (lambda - profile.lambda).abs() > 1e-12 * lambda.abs() {
        return Err(Error::Inconsistency(format!(
            "profile was built for lambda = {}, asked to check lambda = {lambda}",
            profile.lambda
        )));
    }
    let theta = profile.theta_star;
    // Guard against a profile computed for a different distribution: theta*
    // must solve the fixed-point equation for *this* dist.
    let fixed_point_residual = (lambda * (dist.lst(-theta)? - 1.0) - theta).abs();
    if fixed_point_residual > 1e-8 {
        return Err(Error::Inconsistency(format!(
            "profile decay rate {theta} is not this distribution's \
             (fixed-point residual {fixed_point_residual:.3e})"
        )));
    }

    let small = small_band(params, dist)?;
    let large = large_band(params, dist)?;
    let lst_small = small.lst(-theta)?;
    let lst_large = large.lst(-theta)?;

    let rhs = (1.0 - 1.0 / lst_large) / (1.0 - 1.0 / lst_small);
    let lhs = (profile.g_max / profile.g_min) * (lambda + theta) / lambda;
    let condition_i = lhs < rhs;
    let condition_ii = params.x1 + params.x3 <= 2.0 * params.x2;
    let asym_condition = (lambda + theta) / lambda < rhs;
    let tir = asym_tir_from_lsts(
        small.probability(),
        large.probability(),
        lst_small,
        lst_large,
        lambda,
        theta,
    );

    Ok(ImprovementReport {
        x1: params.x1,
        x2: params.x2,
        x3: params.x3,
        lambda,
        rho: profile.rho,
        theta_star: theta,
        p_small: small.probability(),
        p_large: large.probability(),
        lst_small,
        lst_large,
        g_min: profile.g_min,
        g_max: profile.g_max,
        g_bounds_estimated: profile.g_bounds_estimated,
        condition_ratio_lhs: lhs,
        condition_ratio_rhs: rhs,
        condition_i,
        condition_ii,
        stochastic_regime: condition_i && condition_ii,
        asym_condition,
        asym_tir: tir,
    })
}

/// Build cutoffs that provably land in the stochastic improvement regime,
/// for a distribution with support reaching down to zero, given the target
/// `x3`. Sets `x2 = 0.75·x3` and picks `x1` as half the largest admissible
/// small-job cutoff.
pub fn construct_params(
    dist: &JobDist,
    lambda: f64,
    profile: &FcfsTailProfile,
    x3: f64,
) -> Result<NudgeParams> {
    if dist.s_min() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cutoff construction requires jobs arbitrarily close to zero \
             (minimum size is {})",
            dist.s_min()
        )));
    }
    let class = dist.classify_class_i()?;
    if !class.is_class_i {
        return Err(Error::Domain(
            "cutoff construction requires the size moment generating function \
             to blow up at its convergence boundary"
                .into(),
        ));
    }
    if !(x3.is_finite() && x3 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "x3 must be finite and positive, got {x3}"
        )));
    }
    let theta = profile.theta_star;
    let x2 = 0.75 * x3;
    let tentative = NudgeParams {
        x1: 0.0,
        x2,
        x3,
    };
    let large = large_band(&tentative, dist)?;
    let lst_large = large.lst(-theta)?;

    let m = (profile.g_max / profile.g_min) * (lambda + theta) / lambda;
    let inner = 1.0 - (1.0 - 1.0 / lst_large) / m;
    let log_bound = if inner <= 0.0 {
        f64::INFINITY
    } else {
        -inner.ln() / theta
    };
    let bound = log_bound.min(x3 / 2.0);
    let params = NudgeParams::new(bound / 2.0, x2, x3)?;

    let report = check_regime(&params, profile, dist, lambda)?;
    if !report.stochastic_regime {
        return Err(Error::Inconsistency(format!(
            "constructed cutoffs ({}, {x2}, {x3}) failed verification \
             (condition_i = {}, condition_ii = {})",
            params.x1, report.condition_i, report.condition_ii
        )));
    }
    Ok(params)
}

/// Asymptotic tail improvement ratio of nudge over FCFS:
/// `1 − lim_{t→∞} P{T_nudge > t} / P{T_fcfs > t}`.
///
/// Positive iff nudging flattens the dominant tail constant. Degenerate
/// bands (no small or no large jobs) yield 0: no swap can ever happen.
pub fn asym_tir(params: &NudgeParams, dist: &JobDist, lambda: f64, theta_star: f64) -> Result<f64> {
    let small = match small_band(params, dist) {
        Ok(b) => b,
        Err(Error::EmptyBand { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let large = match large_band(params, dist) {
        Ok(b) => b,
        Err(Error::EmptyBand { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    Ok(asym_tir_from_lsts(
        small.probability(),
        large.probability(),
        small.lst(-theta_star)?,
        large.lst(-theta_star)?,
        lambda,
        theta_star,
    ))
}

/// Coefficient of `e^{-theta* t}` in the nudge response-time tail:
/// `c_fcfs · (1 − asym_tir)`.
pub fn nudge_tail_constant(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    profile: &FcfsTailProfile,
) -> Result<f64> {
    let tir = asym_tir(params, dist, lambda, profile.theta_star)?;
    Ok(profile.c_fcfs * (1.0 - tir))
}

/// Transform `E[e^{-s W_0}]` of the waiting time of an arrival that finds
/// the queue empty (the server may still be busy), for a stable queue.
/// Despite the name this is a full transform in `s`; at `s = 0` it equals
/// the probability that an arrival finds the queue (not system) empty.
pub fn q_empty_no_interrupt(lambda: f64, dist: &JobDist, s: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "arrival rate {lambda} must be positive and finite"
        )));
    }
    let rho = lambda * dist.mean();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    if s < 0.0 {
        let theta = decay_rate(lambda, dist)?;
        if s <= -theta {
            return Err(Error::Domain(format!(
                "empty-queue transform needs s > -theta* = {}, got {s}",
                -theta
            )));
        }
    }
    q_core(lambda, rho, dist, s)
}

/// The empty-queue transform with stability and domain already validated.
fn q_core(lambda: f64, rho: f64, dist: &JobDist, s: f64) -> Result<f64> {
    let lst_lambda = dist.lst(lambda)?;
    let c = (1.0 - rho) / lst_lambda;
    if (s - lambda).abs() < Q_SERIES_WINDOW * lambda {
        // Series across the removable singularity at s = lambda.
        let d1 = dist.lst_deriv(lambda)?;
        let d2 = dist.lst_second_deriv(lambda)?;
        Ok(c * (lst_lambda - lambda * d1 - (s - lambda) * lambda * d2 / 2.0))
    } else {
        Ok(c * (lambda * dist.lst(s)? - s * lst_lambda) / (lambda - s))
    }
}

/// Cached context for the nudge transform family: the FCFS queue (with its
/// decay rate) plus the small and large bands. `None` bands carry no mass.
pub struct NudgeAnalysis {
    queue: FcfsQueue,
    params: NudgeParams,
    small: Option<BandConditioned>,
    large: Option<BandConditioned>,
}

impl NudgeAnalysis {
    pub fn new(params: NudgeParams, dist: JobDist, lambda: f64) -> Result<Self> {
        let queue = FcfsQueue::new(lambda, dist)?;
        let small = match small_band(&params, queue.dist()) {
            Ok(b) => Some(b),
            Err(Error::EmptyBand { .. }) => None,
            Err(e) => return Err(e),
        };
        let large = match large_band(&params, queue.dist()) {
            Ok(b) => Some(b),
            Err(Error::EmptyBand { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(NudgeAnalysis {
            queue,
            params,
            small,
            large,
        })
    }

    pub fn queue(&self) -> &FcfsQueue {
        &self.queue
    }
    pub fn params(&self) -> &NudgeParams {
        &self.params
    }
    pub fn small(&self) -> Option<&BandConditioned> {
        self.small.as_ref()
    }
    pub fn large(&self) -> Option<&BandConditioned> {
        self.large.as_ref()
    }
    pub fn p_small(&self) -> f64 {
        self.small.as_ref().map_or(0.0, |b| b.probability())
    }
    pub fn p_large(&self) -> f64 {
        self.large.as_ref().map_or(0.0, |b| b.probability())
    }

    fn q(&self, s: f64) -> Result<f64> {
        q_core(self.queue.lambda(), self.queue.rho(), self.queue.dist(), s)
    }

    /// `E[e^{-s T_Q,large}]`: queueing time of a large job, which may be
    /// delayed once by a small job that swaps ahead of it.
    pub fn large_queueing_lst(&self, s: f64) -> Result<f64> {
        let tq = self.queue.waiting_lst(s)?;
        let (p_small, lst_small) = match &self.small {
            None => return Ok(tq),
            Some(b) => (b.probability(), b.lst(s)?),
        };
        let swap_weight = p_small * (1.0 - lst_small);
        Ok((1.0 - swap_weight) * tq + swap_weight * self.queue.waiting_lst(self.queue.lambda() + s)?)
    }

    /// `E[e^{-s T_Q,small}]`: queueing time of a small job, which may jump
    /// ahead of a large job at the back of the queue.
    pub fn small_queueing_lst(&self, s: f64) -> Result<f64> {
        let tq = self.queue.waiting_lst(s)?;
        let (p_large, lst_large) = match &self.large {
            None => return Ok(tq),
            Some(b) => (b.probability(), b.lst(s)?),
        };
        let swap_weight = p_large * (1.0 - lst_large);
        let service = self.queue.dist().lst(s)?;
        Ok(tq * (1.0 + swap_weight / service) - swap_weight * self.q(s)? / service)
    }

    /// Closed-form response-time transform `E[e^{-s T_nudge}]`.
    pub fn response_lst(&self, s: f64) -> Result<f64> {
        let tq = self.queue.waiting_lst(s)?;
        let service = self.queue.dist().lst(s)?;
        let fcfs = tq * service;
        let (small, large) = match (&self.small, &self.large) {
            (Some(s), Some(l)) => (s, l),
            _ => return Ok(fcfs), // no swaps possible
        };
        let lst_small = small.lst(s)?;
        let lst_large = large.lst(s)?;
        let tq_shift = self.queue.waiting_lst(self.queue.lambda() + s)?;
        let correction = lst_large * (1.0 - lst_small) * (tq_shift - tq)
            + lst_small * (1.0 - lst_large) * (tq - self.q(s)?) / service;
        Ok(fcfs + small.probability() * large.probability() * correction)
    }

    /// The same response-time transform assembled as a mixture over job
    /// classes. Must agree with [`NudgeAnalysis::response_lst`] to ~1e-9;
    /// the two routes evaluate genuinely different expression trees.
    pub fn response_lst_mixture(&self, s: f64) -> Result<f64> {
        let tq = self.queue.waiting_lst(s)?;
        let service = self.queue.dist().lst(s)?;
        let mut rest = service;
        let mut total = 0.0;
        if let Some(b) = &self.small {
            let class_service = b.lst(s)?;
            total += b.probability() * self.small_queueing_lst(s)? * class_service;
            rest -= b.probability() * class_service;
        }
        if let Some(b) = &self.large {
            let class_service = b.lst(s)?;
            total += b.probability() * self.large_queueing_lst(s)? * class_service;
            rest -= b.probability() * class_service;
        }
        Ok(total + tq * rest)
    }

    /// Asymptotic tail improvement ratio for this configuration.
    pub fn asym_tir(&self) -> Result<f64> {
        let (small, large) = match (&self.small, &self.large) {
            (Some(s), Some(l)) => (s, l),
            _ => return Ok(0.0),
        };
        let theta = self.queue.theta_star();
        Ok(asym_tir_from_lsts(
            small.probability(),
            large.probability(),
            small.lst(-theta)?,
            large.lst(-theta)?,
            self.queue.lambda(),
            theta,
        ))
    }
}

/// Analytic bounds on the per-job swap overshoot probabilities at a
/// threshold `t`: `P{swap pushes a large job's response past t}` is at most
/// `upper_i`, and `P{swap pulls a small job's response below t}` is at
/// least `lower_d`.
#[derive(Clone, Copy, Debug)]
pub struct SwapOvershootBounds {
    pub upper_i: f64,
    pub lower_d: f64,
}

/// `E[e^{theta·min(t, S_small + S_large)}]` for independent band draws,
/// by quadrature over the small band with the large-band moment inside.
fn exp_min_sum_moment(
    small: &BandConditioned,
    large: &BandConditioned,
    theta: f64,
    t: f64,
) -> Result<f64> {
    // The inner expectation kinks where t - u crosses the large band's
    // edges; split the outer integral there.
    let cuts = [t - large.hi(), t - large.lo(), t];
    let inner_err: Cell<Option<Error>> = Cell::new(None);
    let value = small.integrate_against(
        |u| {
            let cap = t - u;
            let below = match large.partial_exp_moment(theta, cap) {
                Ok(v) => v,
                Err(e) => {
                    inner_err.set(Some(e));
                    return 0.0;
                }
            };
            (theta * u).exp() * below + (theta * t).exp() * (1.0 - large.prob_below(cap))
        },
        &cuts,
        1.0, // small band is bounded; scale unused
        OVERSHOOT_TOL,
    )?;
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    Ok(value)
}

/// Bounds on the swap overshoot event probabilities at threshold `t`,
/// using the profile's `g_min`/`g_max` envelope of the waiting density.
pub fn swap_overshoot_bounds(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    profile: &FcfsTailProfile,
    t: f64,
) -> Result<SwapOvershootBounds> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {t} must be nonnegative"
        )));
    }
    let small = small_band(params, dist)?;
    let large = large_band(params, dist)?;
    let theta = profile.theta_star;
    let p = small.probability() * large.probability();

    let e_joint = exp_min_sum_moment(&small, &large, theta, t)?;
    let e_large = large.exp_min_moment(theta, t)?;
    let e_small = small.exp_min_moment(theta, t)?;

    let envelope = (-theta * t).exp() / theta;
    let upper_i = p * envelope * profile.g_max * (e_joint - e_large);
    let lower_d =
        p * envelope * profile.g_min * (lambda / (lambda + theta)) * (e_joint - e_small);
    Ok(SwapOvershootBounds { upper_i, lower_d })
}

/// Queueing time transform of a large job under nudge; see
/// [`NudgeAnalysis::large_queueing_lst`].
pub fn large_queueing_lst(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    NudgeAnalysis::new(*params, dist.clone(), lambda)?.large_queueing_lst(s)
}

/// Queueing time transform of a small job under nudge; see
/// [`NudgeAnalysis::small_queueing_lst`].
pub fn small_queueing_lst(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    NudgeAnalysis::new(*params, dist.clone(), lambda)?.small_queueing_lst(s)
}

/// Response-time transform under nudge (closed form); see
/// [`NudgeAnalysis::response_lst`].
pub fn nudge_response_lst(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    NudgeAnalysis::new(*params, dist.clone(), lambda)?.response_lst(s)
}

/// Response-time transform under nudge, mixture route; see
/// [`NudgeAnalysis::response_lst_mixture`].
pub fn nudge_response_lst_mixture(
    params: &NudgeParams,
    dist: &JobDist,
    lambda: f64,
    s: f64,
) -> Result<f64> {
    NudgeAnalysis::new(*params, dist.clone(), lambda)?.response_lst_mixture(s)
}

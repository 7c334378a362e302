//! First-come-first-served M/G/1 waiting-time analysis.
//!
//! For a stable queue with arrival rate `lambda` and a light-tailed job-size
//! distribution, the stationary waiting time has an exponentially decaying
//! tail: `P{T_Q > t} ~ (g*/theta*) e^{-theta* t}`. This module computes
//!
//! - the decay rate `theta*`, the least positive root of
//!   `lambda E[e^{theta S}] - lambda - theta = 0`;
//! - the waiting-time transform `E[e^{-s T_Q}]` (Pollaczek–Khinchine);
//! - the waiting-time density on a uniform grid, by marching the renewal
//!   (level-crossing) integral equation
//!   `f(t) = lambda (1-rho) (1-F_S(t)) + lambda ((1-F_S) * f)(t)`;
//! - the normalized profile `g(t) = f(t) e^{theta* t}`, its limit `g*`, and
//!   conservative grid bounds `g_min`/`g_max`, which drive the improvement
//!   conditions for nudge scheduling.

use crate::csvio;
use crate::dist::JobDist;
use crate::error::{Error, Result};
use crate::roots::bisect;

/// Hard cap on grid size (memory ~ 8 bytes/point).
const MAX_GRID_POINTS: f64 = 1e7;
/// The tilted kernel analysis supports truncating the kernel where the job
/// ccdf drops below this; contributions beyond are below float resolution.
const KERNEL_CCDF_FLOOR: f64 = 1e-16;

/// Dot product with independent accumulators so the hot convolution in the
/// density marcher vectorizes (a single running sum would serialize on the
/// add latency).
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let mut acc = [0.0f64; LANES];
    let whole = n - n % LANES;
    for (ca, cb) in a[..whole].chunks_exact(LANES).zip(b[..whole].chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += ca[l] * cb[l];
        }
    }
    let mut s = acc.iter().sum::<f64>();
    for (x, y) in a[whole..n].iter().zip(&b[whole..n]) {
        s += x * y;
    }
    s
}

/// Exponential decay rate of the stationary waiting/response-time tail:
/// least positive `theta` with `lambda (E[e^{theta S}] - 1) = theta`.
pub fn decay_rate(lambda: f64, dist: &JobDist) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "arrival rate {lambda} must be positive and finite"
        )));
    }
    let rho = lambda * dist.mean();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let h = |theta: f64| -> Result<f64> { Ok(lambda * (dist.lst(-theta)? - 1.0) - theta) };

    // Upper bracket end: h must be positive there.
    let s_crit = dist.s_crit();
    let hi = if s_crit.is_finite() {
        // Just inside the evaluation margin at the convergence boundary.
        let cand = s_crit * (1.0 - 2e-6);
        if h(cand)? <= 0.0 {
            // The moment generating function stays too small up to its
            // boundary; the tail is not purely exponential at this load.
            return Err(Error::NoDecayRate { s_crit });
        }
        cand
    } else {
        let mut cand = 1.0 / dist.mean();
        while h(cand)? <= 0.0 {
            cand *= 2.0;
            if cand > 1e30 {
                return Err(Error::NoDecayRate { s_crit });
            }
        }
        cand
    };

    // Lower bracket end: h(theta) < 0 on (0, theta*), so halve down from hi
    // until the sign is strictly negative.
    let mut lo = hi * 0.5;
    while h(lo)? >= 0.0 {
        lo *= 0.5;
        if lo < 1e-250 {
            return Err(Error::Inconsistency(format!(
                "decay-rate bracket collapsed (lambda = {lambda}); \
                 load may be too close to 1 for float resolution"
            )));
        }
    }

    // h is computed through Result; cache failures and report after.
    let mut eval_err: Option<Error> = None;
    let root = bisect(
        |theta| match h(theta) {
            Ok(v) => v,
            Err(e) => {
                eval_err = Some(e);
                0.0
            }
        },
        lo,
        hi,
    )?;
    if let Some(e) = eval_err {
        return Err(e);
    }
    let residual = h(root)?.abs();
    if residual > 1e-10 {
        return Err(Error::Instability(format!(
            "decay-rate residual {residual:.3e} exceeds 1e-10 at theta = {root}"
        )));
    }
    Ok(root)
}

/// Waiting-time density values on a uniform grid `t_k = k * step`.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub step: f64,
    /// `values[k]` is the density of the continuous part of the waiting
    /// time at `k * step` (the waiting time also has an atom `1 - rho`
    /// at zero, which is not part of the density).
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.step
    }
    pub fn horizon(&self) -> f64 {
        self.t(self.values.len().saturating_sub(1))
    }
}

/// Normalized waiting-time tail profile `g(t) = f_{T_Q}(t) e^{theta* t}`.
#[derive(Clone, Debug)]
pub struct FcfsTailProfile {
    pub lambda: f64,
    pub rho: f64,
    pub theta_star: f64,
    /// Waiting-time density grid.
    pub grid: DensityGrid,
    /// `g[k] = grid.values[k] * exp(theta* t_k)`.
    pub g: Vec<f64>,
    /// Limit of `g(t)` as `t -> inf`.
    pub g_star: f64,
    /// Grid estimate of `inf g` / `sup g`, widened by the discretization
    /// allowance `10 * step * (lambda + theta*)`.
    pub g_min: f64,
    pub g_max: f64,
    /// The extrema come from a finite grid, not a proof; always true.
    pub g_bounds_estimated: bool,
    /// Response-tail constant: `P{T > t} ~ c_fcfs e^{-theta* t}` with
    /// `c_fcfs = g* E[e^{theta* S}] / theta*`.
    pub c_fcfs: f64,
}

/// A stable FCFS M/G/1 queue with its decay rate precomputed.
#[derive(Clone, Debug)]
pub struct FcfsQueue {
    lambda: f64,
    rho: f64,
    theta_star: f64,
    dist: JobDist,
}

impl FcfsQueue {
    pub fn new(lambda: f64, dist: JobDist) -> Result<Self> {
        let theta_star = decay_rate(lambda, &dist)?;
        Ok(FcfsQueue {
            lambda,
            rho: lambda * dist.mean(),
            theta_star,
            dist,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }
    pub fn dist(&self) -> &JobDist {
        &self.dist
    }

    /// Stationary waiting-time transform `E[e^{-s T_Q}]`, defined for
    /// `s > -theta*` (the transform's dominant pole). The removable
    /// singularity at `s = 0` evaluates to 1.
    pub fn waiting_lst(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        if s <= -self.theta_star {
            return Err(Error::Domain(format!(
                "waiting transform needs s > -theta* = {}, got {s}",
                -self.theta_star
            )));
        }
        let denom = self.lambda * (self.dist.lst(s)? - 1.0) + s;
        Ok((1.0 - self.rho) * s / denom)
    }

    /// Stationary response-time transform `E[e^{-s T}]` (waiting plus an
    /// independent service draw).
    pub fn response_lst(&self, s: f64) -> Result<f64> {
        Ok(self.waiting_lst(s)? * self.dist.lst(s)?)
    }

    /// Residue-style estimate of `g*` from the transform alone:
    /// `lim_{s -> 0} s T_Q-transform(s - theta*)`, Richardson-extrapolated
    /// from s = 1e-4 and 1e-5. Used to cross-check the grid route.
    pub fn g_star_from_transform(&self) -> Result<f64> {
        let v1 = 1e-4 * self.waiting_lst(1e-4 - self.theta_star)?;
        let v2 = 1e-5 * self.waiting_lst(1e-5 - self.theta_star)?;
        Ok((10.0 * v2 - v1) / 9.0)
    }

    /// Default grid resolution and extent: fine enough to resolve both the
    /// arrival and decay scales, long enough for the profile to settle.
    pub fn default_grid(&self) -> (f64, f64) {
        let step = 1e-3f64.min(1.0 / (50.0 * self.lambda));
        let horizon = (30.0 / self.theta_star).max(50.0 * self.dist.mean());
        (step, horizon)
    }

    /// March the waiting-time density over `[0, horizon]` with the given
    /// step. The density satisfies the renewal form
    /// `f = lambda (1-rho) ccdf_S + lambda (ccdf_S * f)` with
    /// `f(0) = lambda (1-rho)`; the trapezoid discretization is solved
    /// forward in one pass. The kernel is truncated where the job-size ccdf
    /// falls below float resolution, which is harmless because the kernel
    /// decays strictly faster than `e^{-theta* u}`.
    pub fn waiting_density_grid(&self, step: f64, horizon: f64) -> Result<DensityGrid> {
        if !self.dist.is_continuous() {
            return Err(Error::NotContinuous {
                at: self.dist.atom().unwrap_or(0.0),
            });
        }
        if !(step.is_finite() && step > 0.0 && horizon.is_finite() && horizon >= step) {
            return Err(Error::InvalidParameter(format!(
                "density grid needs 0 < step <= horizon, got step {step}, horizon {horizon}"
            )));
        }
        let n = (horizon / step).ceil();
        if n > MAX_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "density grid would need {n} points (cap {MAX_GRID_POINTS:.0}); \
                 increase step or decrease horizon"
            )));
        }
        let n = n as usize;
        let lambda = self.lambda;
        let rho = self.rho;

        // Kernel k[j] = ccdf_S(j step) (the lambda factor is applied in the
        // recursion), truncated once below float resolution.
        let mut kernel: Vec<f64> = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let ccdf = (1.0 - self.dist.cdf(j as f64 * step)).max(0.0);
            if ccdf <= KERNEL_CCDF_FLOOR {
                break;
            }
            kernel.push(ccdf);
        }
        if kernel.is_empty() {
            kernel.push(1.0);
        }
        let klen = kernel.len(); // kernel[j] valid for j < klen
        // Reversed copy so the convolution below reads both slices forward.
        let rev_kernel: Vec<f64> = kernel.iter().rev().copied().collect();

        let mut f: Vec<f64> = Vec::with_capacity(n + 1);
        f.push((1.0 - rho) * lambda);
        let denom = 1.0 - lambda * step * kernel[0] / 2.0;
        if denom <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step {step} too coarse for arrival rate {lambda}"
            )));
        }
        for i in 1..=n {
            // Trapezoid for (ccdf * f)(t_i) = sum over j of k[j] f[i-j]:
            // half-weight ends j = 0 (factor on f[i], folded into denom)
            // and j = i (only while the kernel still reaches back to 0).
            let m = (i - 1).min(klen - 1); // interior terms j = 1..=m
            let mut conv = 0.0;
            if m >= 1 {
                let fs = &f[i - m..i]; // f[i-m] .. f[i-1]
                let ks = &rev_kernel[klen - 1 - m..klen - 1]; // k[m] .. k[1]
                conv = dot(fs, ks);
            }
            let mut src = 0.0;
            if i < klen {
                src = (1.0 - rho) * kernel[i];
                conv += 0.5 * kernel[i] * f[0];
            }
            let value = lambda * (src + step * conv) / denom;
            if value < -1e-9 {
                return Err(Error::Instability(format!(
                    "waiting density went negative ({value:.3e}) at t = {}",
                    i as f64 * step
                )));
            }
            f.push(value.max(0.0));
        }
        Ok(DensityGrid { step, values: f })
    }

    /// Analytic limit of the normalized profile:
    /// `g* = (1-rho) theta* / (-lambda lst'(-theta*) - 1)`.
    pub fn g_star(&self) -> Result<f64> {
        let slope = -self.lambda * self.dist.lst_deriv(-self.theta_star)? - 1.0;
        Ok((1.0 - self.rho) * self.theta_star / slope)
    }

    /// Compute the normalized tail profile on the given grid. Errors with
    /// [`Error::HorizonTooShort`] if `g` has not settled to within 0.5% of
    /// `g*` by the end of the grid.
    pub fn tail_profile(&self, step: f64, horizon: f64) -> Result<FcfsTailProfile> {
        let grid = self.waiting_density_grid(step, horizon)?;
        let g_star = self.g_star()?;
        let theta = self.theta_star;
        let g: Vec<f64> = grid
            .values
            .iter()
            .enumerate()
            .map(|(k, f)| f * (theta * k as f64 * step).exp())
            .collect();
        let last = *g.last().expect("grid is non-empty");
        let rel_gap = (last - g_star).abs() / g_star;
        if rel_gap > 0.005 {
            return Err(Error::HorizonTooShort {
                horizon,
                g_star,
                rel_gap,
            });
        }
        let mut lo = g_star;
        let mut hi = g_star;
        for &v in &g {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // Widen for discretization error: the profile's log-derivative is
        // bounded by lambda + theta*, so one step moves it by at most this
        // factor; allow ten steps of slack.
        let widen = 10.0 * step * (self.lambda + theta);
        let g_min = lo * (1.0 - widen);
        let g_max = hi * (1.0 + widen);
        let c_fcfs = g_star * self.dist.lst(-theta)? / theta;
        Ok(FcfsTailProfile {
            lambda: self.lambda,
            rho: self.rho,
            theta_star: theta,
            grid,
            g,
            g_star,
            g_min,
            g_max,
            g_bounds_estimated: true,
            c_fcfs,
        })
    }

    /// [`FcfsQueue::tail_profile`] on the default grid.
    pub fn tail_profile_default(&self) -> Result<FcfsTailProfile> {
        let (step, horizon) = self.default_grid();
        self.tail_profile(step, horizon)
    }
}

impl FcfsTailProfile {
    /// Write the profile as CSV with columns `t,f,g`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let step = self.grid.step;
        csvio::write_rows(
            w,
            "t,f,g",
            self.grid
                .values
                .iter()
                .zip(&self.g)
                .enumerate()
                .map(|(k, (f, g))| vec![k as f64 * step, *f, *g]),
        )
    }
}

#[cfg(test)]
mod tests;

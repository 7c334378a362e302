//! Streaming statistics for simulation outputs: moment accumulators that
//! merge across parallel replications, a log-spaced histogram for tail
//! summaries, and binomial/ratio confidence intervals.

use crate::error::{Error, Result};

/// 97.5% normal quantile, for two-sided 95% intervals.
pub const Z_95: f64 = 1.959963984540054;

/// Streaming mean/variance/max accumulator (Welford), with an exact
/// pairwise merge so replication order determines the result, not thread
/// scheduling.
#[derive(Clone, Copy, Debug)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
    max: f64,
}

impl Default for Welford {
    fn default() -> Self {
        Welford {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        if x > self.max {
            self.max = x;
        }
    }

    /// Chan et al. parallel combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let delta = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.n += other.n;
        if other.max > self.max {
            self.max = other.max;
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    /// Sample variance (n−1 denominator); 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
    pub fn max(&self) -> f64 {
        self.max
    }
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Accumulator for one transform probe: running sums of `e^{-s·x}` and its
/// square.
#[derive(Clone, Copy, Debug)]
pub struct ProbeAcc {
    pub s: f64,
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl ProbeAcc {
    pub fn new(s: f64) -> Self {
        ProbeAcc {
            s,
            n: 0,
            sum: 0.0,
            sumsq: 0.0,
        }
    }
    #[inline]
    pub fn push(&mut self, x: f64) {
        let v = (-self.s * x).exp();
        self.n += 1;
        self.sum += v;
        self.sumsq += v * v;
    }
    pub fn merge(&mut self, other: &ProbeAcc) {
        debug_assert_eq!(self.s.to_bits(), other.s.to_bits());
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
    }
    pub fn count(&self) -> u64 {
        self.n
    }
    pub fn estimate(&self) -> f64 {
        self.sum / self.n as f64
    }
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sumsq / n) - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Point estimate with a standard error, as returned by transform probes.
#[derive(Clone, Copy, Debug)]
pub struct LstEstimate {
    pub s: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
}

impl From<&ProbeAcc> for LstEstimate {
    fn from(p: &ProbeAcc) -> Self {
        LstEstimate {
            s: p.s,
            estimate: p.estimate(),
            std_error: p.std_error(),
            n: p.count(),
        }
    }
}

/// Sample mean and standard error of `e^{-s·x}` over a slice.
pub fn empirical_lst(samples: &[f64], s: f64) -> Result<LstEstimate> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transform probe point s = {s} must be nonnegative"
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot estimate a transform from zero samples".into(),
        ));
    }
    let mut acc = ProbeAcc::new(s);
    for &x in samples {
        acc.push(x);
    }
    Ok(LstEstimate::from(&acc))
}

/// Fixed-shape histogram with logarithmically spaced bins over `[lo, hi)`,
/// plus underflow/overflow counters. Total mass counts every recorded
/// value.
#[derive(Clone, Debug)]
pub struct LogHistogram {
    lo: f64,
    hi: f64,
    ln_lo: f64,
    inv_ln_step: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    total: u64,
}

impl LogHistogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "histogram range [{lo}, {hi}) must be finite with 0 < lo < hi"
            )));
        }
        if bins == 0 {
            return Err(Error::InvalidParameter(
                "histogram needs at least one bin".into(),
            ));
        }
        let ln_lo = lo.ln();
        let ln_step = (hi.ln() - ln_lo) / bins as f64;
        Ok(LogHistogram {
            lo,
            hi,
            ln_lo,
            inv_ln_step: 1.0 / ln_step,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
            total: 0,
        })
    }

    #[inline]
    pub fn record(&mut self, x: f64) {
        self.total += 1;
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let idx = ((x.ln() - self.ln_lo) * self.inv_ln_step) as usize;
            let idx = idx.min(self.counts.len() - 1);
            self.counts[idx] += 1;
        }
    }

    pub fn merge(&mut self, other: &LogHistogram) -> Result<()> {
        if self.lo.to_bits() != other.lo.to_bits()
            || self.hi.to_bits() != other.hi.to_bits()
            || self.counts.len() != other.counts.len()
        {
            return Err(Error::Inconsistency(
                "cannot merge histograms with different bin layouts".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.total += other.total;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }
    pub fn underflow(&self) -> u64 {
        self.underflow
    }
    pub fn overflow(&self) -> u64 {
        self.overflow
    }
    pub fn bins(&self) -> usize {
        self.counts.len()
    }
    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Upper edge of bin `i` (its lower edge is `upper_edge(i-1)`, or `lo`).
    pub fn upper_edge(&self, i: usize) -> f64 {
        let frac = (i + 1) as f64 / self.counts.len() as f64;
        (self.ln_lo + frac * (self.hi.ln() - self.ln_lo)).exp()
    }

    /// Smallest bin upper edge at which the cumulative count reaches
    /// `q·total`. Values below `lo` count toward the first edge; a quantile
    /// landing in the overflow mass returns `hi`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "quantile level {q} must be in [0, 1]"
            )));
        }
        if self.total == 0 {
            return Err(Error::InvalidParameter(
                "quantile of an empty histogram".into(),
            ));
        }
        let target = (q * self.total as f64).ceil() as u64;
        let mut cum = self.underflow;
        if cum >= target {
            return Ok(self.lo);
        }
        for (i, &c) in self.counts.iter().enumerate() {
            cum += c;
            if cum >= target {
                return Ok(self.upper_edge(i));
            }
        }
        Ok(self.hi)
    }
}

/// Normal-approximation 95% binomial interval for `count` successes in `n`
/// trials; returns (estimate, lo, hi) clamped to [0, 1].
pub fn binomial_ci(count: u64, n: u64) -> (f64, f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let p = count as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    (p, (p - Z_95 * se).max(0.0), (p + Z_95 * se).min(1.0))
}

/// 95% interval for the ratio `p_num/p_den` of two tail probabilities
/// estimated from the same `n` trials, by the delta method. `joint` is the
/// count of trials in both tails (pass `None` for independent estimates).
/// Returns `None` when the denominator count is zero.
pub fn tail_ratio_ci(
    num_count: u64,
    den_count: u64,
    joint_count: Option<u64>,
    n: u64,
) -> Option<(f64, f64, f64)> {
    if n == 0 || den_count == 0 {
        return None;
    }
    let nf = n as f64;
    let pn = num_count as f64 / nf;
    let pd = den_count as f64 / nf;
    let r = pn / pd;
    let var_n = pn * (1.0 - pn) / nf;
    let var_d = pd * (1.0 - pd) / nf;
    let cov = match joint_count {
        Some(j) => (j as f64 / nf - pn * pd) / nf,
        None => 0.0,
    };
    let rel_var = if pn > 0.0 {
        var_n / (pn * pn) + var_d / (pd * pd) - 2.0 * cov / (pn * pd)
    } else {
        // Ratio estimate is 0; only the denominator contributes noise.
        var_d / (pd * pd)
    };
    let se = (r * r * rel_var).max(0.0).sqrt().max(if pn == 0.0 {
        // Degenerate zero-count numerator: fall back to binomial width.
        (pn.max(1.0 / nf) / nf).sqrt() / pd
    } else {
        0.0
    });
    Some((r, r - Z_95 * se, r + Z_95 * se))
}

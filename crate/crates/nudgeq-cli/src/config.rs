//! Experiment config files: strict JSON in, fully resolved settings out.
//!
//! A config names one job-size distribution, the load (via `lambda` or
//! `rho`, exactly one), optional nudge cutoffs, the policies to run, and
//! run-scale knobs. Every unknown key is an error — a typo must fail
//! loudly, not silently fall back to a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use nudgeq::dist::{DistSpec, JobDist};
use nudgeq::nudge::NudgeParams;
use nudgeq::sim::Policy;

/// Raw config file contents, before validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Distribution object, e.g. `{"family": "exponential", "rate": 1.0}`.
    pub distribution: serde_json::Value,
    /// Arrival rate; exactly one of `lambda`/`rho` must be present.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Load; exactly one of `lambda`/`rho` must be present.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Small-job cutoff; defaults to the mean job size.
    #[serde(default)]
    pub x1: Option<f64>,
    /// Large-job lower cutoff; defaults to `x1`.
    #[serde(default)]
    pub x2: Option<f64>,
    /// Large-job upper cutoff; a number or the string `"inf"` (default).
    #[serde(default)]
    pub x3: Option<Cutoff>,
    /// Policies to simulate; defaults to `["nudge"]`.
    #[serde(default)]
    pub policies: Option<Vec<PolicyCfg>>,
    #[serde(default)]
    pub n_arrivals: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replications: Option<u32>,
    /// Threshold grid; omitted means "derive from a pilot run".
    #[serde(default)]
    pub thresholds: Option<ThresholdCfg>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// A cutoff value: a number, or `"inf"` for an unbounded band.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Cutoff {
    Number(f64),
    Word(InfWord),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfWord {
    Inf,
}

impl Cutoff {
    fn value(self) -> f64 {
        match self {
            Cutoff::Number(v) => v,
            Cutoff::Word(InfWord::Inf) => f64::INFINITY,
        }
    }
}

/// One policy entry: a bare name for the parameterless policies, or an
/// object for the variants, e.g. `{"kind": "nudge_budget", "k": 2}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PolicyCfg {
    Name(String),
    Detailed(DetailedPolicy),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetailedPolicy {
    Fcfs,
    Nudge,
    NudgeBudget { k: u32 },
    NudgeProb { p: f64 },
}

/// Threshold grid description.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdCfg {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

impl ThresholdCfg {
    /// Expand to the strictly increasing grid it describes.
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(format!(
                "threshold grid needs finite min < max, got [{}, {}]",
                self.min, self.max
            ));
        }
        if self.min < 0.0 {
            return Err("threshold grid must start at a nonnegative value".into());
        }
        if self.count < 2 {
            return Err("threshold grid needs at least two points".into());
        }
        match self.scale {
            Scale::Linear => {
                let step = (self.max - self.min) / (self.count - 1) as f64;
                Ok((0..self.count)
                    .map(|i| self.min + step * i as f64)
                    .collect())
            }
            Scale::Log => {
                if self.min <= 0.0 {
                    return Err("a log-scaled threshold grid must start above zero".into());
                }
                Ok(log_spaced(self.min, self.max, self.count))
            }
        }
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub arrivals: Option<u64>,
    pub replications: Option<u32>,
    pub out_dir: Option<PathBuf>,
}

/// A validated, fully resolved experiment.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub dist: JobDist,
    /// Echo of the distribution object, for the manifest.
    pub dist_value: serde_json::Value,
    pub lambda: f64,
    pub rho: f64,
    pub params: NudgeParams,
    pub policies: Vec<Policy>,
    pub n_arrivals: u64,
    pub seed: u64,
    pub replications: u32,
    /// Explicit grid if the config gave one; otherwise derived later from
    /// a pilot run.
    pub thresholds: Option<Vec<f64>>,
    pub out_dir: PathBuf,
}

pub const DEFAULT_ARRIVALS: u64 = 100_000_000;
pub const DEFAULT_REPLICATIONS: u32 = 8;
pub const DEFAULT_SEED: u64 = 1;

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, String> {
        // Parse leniently first so the distribution object can be
        // validated by the strict family-aware parser below.
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn resolve(&self, over: &Overrides) -> Result<Resolved, String> {
        let spec = DistSpec::from_value(&self.distribution).map_err(|e| format!("config: {e}"))?;
        let dist = JobDist::from_spec(spec).map_err(|e| format!("config: {e}"))?;
        let mean = dist.mean();

        let lambda = match (self.lambda, self.rho) {
            (Some(l), None) => l,
            (None, Some(r)) => r / mean,
            (Some(_), Some(_)) => {
                return Err("config: give exactly one of \"lambda\" and \"rho\", not both".into())
            }
            (None, None) => {
                return Err("config: give exactly one of \"lambda\" and \"rho\"".into())
            }
        };
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(format!("config: arrival rate {lambda} must be positive"));
        }
        let rho = lambda * mean;

        let x1 = self.x1.unwrap_or(mean);
        let x2 = self.x2.unwrap_or(x1);
        let x3 = self.x3.map_or(f64::INFINITY, Cutoff::value);
        let params = NudgeParams::new(x1, x2, x3).map_err(|e| format!("config: {e}"))?;

        let policies = match &self.policies {
            None => vec![Policy::Nudge(params)],
            Some(list) => {
                if list.is_empty() {
                    return Err("config: the policy list must not be empty".into());
                }
                list.iter()
                    .map(|p| resolve_policy(p, params))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };

        let thresholds = match &self.thresholds {
            Some(t) => Some(t.grid()?),
            None => None,
        };

        Ok(Resolved {
            dist,
            dist_value: self.distribution.clone(),
            lambda,
            rho,
            params,
            policies,
            n_arrivals: over.arrivals.or(self.n_arrivals).unwrap_or(DEFAULT_ARRIVALS),
            seed: over.seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            replications: over
                .replications
                .or(self.replications)
                .unwrap_or(DEFAULT_REPLICATIONS),
            thresholds,
            out_dir: over
                .out_dir
                .clone()
                .or_else(|| self.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("nudgeq_out")),
        })
    }
}

fn resolve_policy(cfg: &PolicyCfg, params: NudgeParams) -> Result<Policy, String> {
    match cfg {
        PolicyCfg::Name(name) => match name.as_str() {
            "fcfs" => Ok(Policy::Fcfs),
            "nudge" => Ok(Policy::Nudge(params)),
            other => Err(format!(
                "config: unknown policy {other:?}; use \"fcfs\", \"nudge\", \
                 {{\"kind\": \"nudge_budget\", \"k\": N}} or \
                 {{\"kind\": \"nudge_prob\", \"p\": P}}"
            )),
        },
        PolicyCfg::Detailed(d) => Ok(match *d {
            DetailedPolicy::Fcfs => Policy::Fcfs,
            DetailedPolicy::Nudge => Policy::Nudge(params),
            DetailedPolicy::NudgeBudget { k } => Policy::NudgeBudget { params, k },
            DetailedPolicy::NudgeProb { p } => Policy::NudgeProb { params, p },
        }),
    }
}

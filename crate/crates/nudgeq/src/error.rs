use thiserror::Error;

/// Unified error type for construction, analysis and simulation failures.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A distribution or configuration parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Offered load is at or above capacity; steady-state quantities do not exist.
    #[error("unstable system: rho = {rho} >= 1")]
    Unstable { rho: f64 },

    /// Transform argument at or beyond the convergence abscissa.
    #[error(
        "transform argument s = {s} outside the convergence region \
         (boundary at -{s_crit}, refused within {margin} of it)"
    )]
    TransformDomain { s: f64, s_crit: f64, margin: f64 },

    /// Argument outside the domain of an analysis operation.
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A size band carries no probability mass under the distribution.
    #[error("empty {name} band [{lo}, {hi}): zero probability mass")]
    EmptyBand { name: &'static str, lo: f64, hi: f64 },

    /// Operation requires a continuous job-size distribution.
    #[error("distribution has an atom at {at}; a continuous density is required")]
    NotContinuous { at: f64 },

    /// The decay-rate equation has no root below the convergence abscissa.
    #[error(
        "no decay rate in (0, {s_crit}): lambda*lst(-theta) - lambda - theta \
         has no sign change (transform bounded at its singularity, or load too high)"
    )]
    NoDecayRate { s_crit: f64 },

    /// Numerical integration failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailed(String),

    /// A computed quantity violates a structural property (negative density, ...).
    #[error("numerical instability: {0}")]
    Instability(String),

    /// Density grid horizon ended before the normalized profile settled.
    #[error(
        "grid horizon {horizon} too short: relativized density still {rel_gap:.3e} \
         away from its limit {g_star:.6e}; extend the horizon"
    )]
    HorizonTooShort { horizon: f64, g_star: f64, rel_gap: f64 },

    /// Internal cross-check between two computation routes disagreed.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Analysis and simulation toolkit for nudge scheduling in an M/G/1 queue.
//!
//! The nudge policy is a one-swap variant of first-come-first-served: when a
//! small job arrives and finds a large job at the back of the queue, the two
//! exchange places — each job participates in at most one such exchange.
//! This crate provides:
//!
//! - a catalogue of job-size distributions with densities, transforms,
//!   moments and samplers ([`dist`]);
//! - exact FCFS waiting-time analysis: the exponential decay rate of the
//!   response-time tail, the waiting-time transform, and the normalized
//!   density profile that controls when nudging helps ([`fcfs`]);
//! - nudge-specific analysis: improvement conditions, threshold
//!   construction, the asymptotic tail-improvement ratio, and response-time
//!   transforms ([`nudge`]);
//! - a discrete-event simulator with a coupled FCFS/nudge mode that shares
//!   every arrival and size draw between the two policies, giving exact
//!   per-job response-time relations ([`sim`]).

pub mod csvio;
pub mod dist;
pub mod error;
pub mod fcfs;
pub mod nudge;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod sim;
pub mod special;

pub use dist::{BandConditioned, ClassIReport, DistSpec, JobDist};
pub use error::{Error, Result};
pub use fcfs::{decay_rate, DensityGrid, FcfsQueue, FcfsTailProfile};
pub use nudge::{
    asym_tir, check_regime, construct_params, large_band, large_queueing_lst,
    nudge_response_lst, nudge_response_lst_mixture, nudge_tail_constant, q_empty_no_interrupt,
    small_band, small_queueing_lst, swap_overshoot_bounds, ImprovementReport, JobClass,
    NudgeAnalysis, NudgeParams, SwapOvershootBounds,
};
pub use sim::{
    coupled_run, run, CoupledOutcome, JobRecord, Policy, SimConfig, SimulationOutcome,
    SwapDirection, TirCurve,
};

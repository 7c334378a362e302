//! Seeded random streams.
//!
//! Every stochastic component draws from its own named substream of a
//! ChaCha8 generator, so changing one consumer (say, a policy coin flip)
//! never perturbs the draws seen by another (arrival times, job sizes).
//! Replications get disjoint stream families derived from the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub const CH_ARRIVALS: u64 = 0;
pub const CH_SIZES: u64 = 1;
pub const CH_POLICY: u64 = 2;
pub const CH_AUX: u64 = 3;
const CHANNELS: u64 = 4;

/// Independent generator for a (seed, replication, channel) triple.
pub fn stream(seed: u64, replication: u64, channel: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication.wrapping_mul(CHANNELS) + channel);
    rng
}

/// Exponential draw with the given rate; finite for every generator output.
#[inline]
pub fn exp_draw<R: rand::Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

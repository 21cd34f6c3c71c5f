//! Seed discipline for simulations.
//!
//! Every random quantity is drawn from a ChaCha8 stream derived from a 64-bit
//! seed. Independent purposes (each arm's reward stream, contexts, the
//! strategy's own coin flips) get distinct ChaCha stream ids so that the n-th
//! draw of an arm does not depend on the order in which arms were pulled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id reserved for a strategy's internal randomness.
pub const STRATEGY_STREAM: u64 = u64::MAX;
/// Stream id reserved for context draws.
pub const CONTEXT_STREAM: u64 = u64::MAX - 1;
/// Stream id reserved for sampling arm locations (continuum arms).
pub const ARM_SAMPLING_STREAM: u64 = u64::MAX - 2;

pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Seed splitting for reproducible parallel Monte Carlo.
//!
//! Every stochastic path derives its generators from a single `u64` seed plus a
//! stream index, so results depend only on the seed and the (fixed) work
//! decomposition, never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type McRng = ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for a single-stream consumer.
pub fn seeded(seed: u64) -> McRng {
    ChaCha8Rng::seed_from_u64(seed)
}

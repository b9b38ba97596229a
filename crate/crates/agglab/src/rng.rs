//! Deterministic randomness: ChaCha8 keyed by a caller-supplied seed, with the
//! draw index as the stream counter. Every stochastic operation takes an
//! explicit `(seed, index)` pair, so results are reproducible bit-for-bit
//! regardless of thread count or evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for draw `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

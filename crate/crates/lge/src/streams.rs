//! Reproducible per-instance RNG streams.
//!
//! Every randomized operation takes an explicit master seed; independent
//! work units (simulation batches, search starts) derive their own stream
//! from `(master_seed, index)` so results are identical regardless of
//! scheduling or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive the RNG stream for work unit `index` under `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

//! Seeded generators. Every instance draws from ChaCha8 keyed by the run seed,
//! on its own stream, so instances are independent of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for instance `index` of sparsity level `k` in a sweep.
pub fn sweep_stream(k: usize, index: usize) -> u64 {
    ((k as u64) << 32) | index as u64
}

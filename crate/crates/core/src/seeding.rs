//! Per-trajectory random streams.
//!
//! Every trajectory gets its own generator seeded from `(master_seed, index)`,
//! so results do not depend on which worker thread ran which trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(master.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix(index)))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for child `index` of `master`.
pub fn child_stream(master: u64, index: u64) -> StreamRng {
    stream(derive_seed(master, index))
}

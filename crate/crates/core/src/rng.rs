//! Seed-splittable deterministic random streams.
//!
//! Every consumer of randomness derives its own stream from a master seed and
//! a path of indices (sweep point, replicate, purpose). Results are therefore
//! independent of execution order and of how many worker threads run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags so no two uses inside a replicate share a stream.
pub mod purpose {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const VIEW_SPLIT: u64 = 3;
    pub const MASK_TRAIN: u64 = 4;
    pub const MASK_TEST: u64 = 5;
}

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit permutation.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a branch `index`.
///
/// Chain calls to split along a path: `derive_seed(derive_seed(s, point),
/// replicate)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ index.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15))
}

/// A deterministic generator for the given seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

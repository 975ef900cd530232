//! Seed derivation. All randomness in the pipeline flows from a single
//! 64-bit master seed through [`derive`], so any record, epoch or pixel can be
//! regenerated independently of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed of `seed` for a path of stream labels.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels, so unrelated consumers of the same seed never collide.
pub mod stream {
    pub const SCENE: u64 = 1;
    pub const TEXT: u64 = 2;
    pub const RECORD: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const TEACHER: u64 = 5;
    pub const DROPOUT: u64 = 6;
    pub const INIT: u64 = 7;
    pub const PLACEMENT: u64 = 8;
    pub const MOTION: u64 = 9;
    pub const SUBSAMPLE: u64 = 10;
}

//! Seed derivation. Every random stream in the crate is keyed by a master seed
//! plus a small tuple of labels so that results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of labels.
pub fn mix_seed(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(master), |acc, &l| {
        splitmix64(acc ^ splitmix64(l))
    })
}

pub fn stream(master: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, labels))
}

/// Stream labels, kept in one place so they never collide.
pub(crate) mod label {
    pub const BNB_LEVEL: u64 = 0x1000;
    pub const NFOLD: u64 = 0x2000;
    pub const REFL_MAP: u64 = 0x3000;
    pub const COVERING: u64 = 0x4000;
}

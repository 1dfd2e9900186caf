//! Seed derivation helpers.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value obtained by mixing a parent seed with a sequence of stream labels.
//! Streams derived from distinct label paths are independent for practical
//! purposes and do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from `parent` and a path of labels.
pub fn derive_seed(parent: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(parent), |acc, &l| {
        mix64(acc ^ mix64(l.wrapping_add(0x51_7CC1_B727_220A)))
    })
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels used across modules, kept in one place so no two
/// consumers accidentally share a stream.
pub(crate) mod stream {
    pub const SUGGEST: u64 = 1;
    pub const POINT: u64 = 2;
    pub const FINAL: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const INIT: u64 = 5;
    pub const GRADIENT: u64 = 6;
    pub const BASE: u64 = 7;
    pub const STAGE2: u64 = 8;
    pub const REEVAL: u64 = 9;
}

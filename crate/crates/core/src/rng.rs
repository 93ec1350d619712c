//! Seeded random number generation.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! a base seed and a stream tag, so adding a consumer never shifts the draws
//! of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser, used to decorrelate (seed, tag) combinations.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, tag: u64) -> Rng {
    Rng::seed_from_u64(mix(seed, tag))
}

/// Stream tags. Kept in one place so they never collide.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const LATENT: u64 = 2;
    pub const TRUTH: u64 = 3;
    pub const CORRUPT: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const NEGATIVES: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const BLOBS: u64 = 8;
    pub const PROBE: u64 = 9;
    pub const CHANNEL_NEG: u64 = 10;
    pub const CHANNEL_POS: u64 = 11;
    pub const CHANNEL: u64 = 12;
    pub const AUX_SEED: u64 = 13;
}

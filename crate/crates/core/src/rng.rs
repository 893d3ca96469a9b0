//! Seed derivation for reproducible runs.
//!
//! Every stochastic component draws from its own ChaCha8 stream derived
//! from a base seed and a stream salt, so episodes can run in parallel
//! without sharing RNG state and replay identically at any parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream salts. Distinct per consumer so streams never alias.
pub mod salt {
    pub const SPAWN: u64 = 1;
    pub const DETECT: u64 = 2;
    pub const GROUNDING: u64 = 3;
    pub const HEADING: u64 = 4;
    pub const LLM: u64 = 5;
    pub const GENERATOR: u64 = 6;
    pub const EPISODE: u64 = 7;
}

/// splitmix64 finalizer over `seed ^ f(salt)`; stable across platforms.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic stream for (seed, salt).
pub fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, salt))
}

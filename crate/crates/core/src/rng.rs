//! Seeded random streams.
//!
//! Every pipeline stage draws from its own stream derived from the run seed and
//! a stage tag, so changing how much randomness one stage consumes never shifts
//! another stage's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a stage tag (FNV-1a over the tag).
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(seed) ^ h)
}

pub fn stream(seed: u64, stage: &str) -> StageRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stage))
}

pub fn from_seed(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

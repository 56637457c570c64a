//! Deterministic seed derivation.
//!
//! All randomness in the pipeline flows from a single `master_seed`. Sub-streams
//! are derived by mixing the master seed with a purpose tag and integer
//! coordinates, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit seed.
pub fn derive_seed(master_seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master_seed ^ GOLDEN), |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

/// Seed for one completion, a pure function of its coordinates.
pub fn completion_seed(master_seed: u64, seed_id: usize, completion_index: usize) -> u64 {
    derive_seed(master_seed, &[seed_id as u64, completion_index as u64])
}

/// Stable 64-bit tag for a stream purpose ("negatives", "folds", ...).
pub fn tag(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn stream(master_seed: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, &[tag(purpose)]))
}

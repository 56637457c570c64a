//! Synthetic inputs for the pipeline benchmarks.

use pedant_core::Candidate;
use pedant_core::datasets::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "people", "weak", "pain", "hate", "fools", "control", "money", "fear", "power", "prey", "cruel", "rules",
    "friends", "family", "work", "game", "night", "city", "blood", "revenge", "lies", "victim", "trust", "hunt",
];

/// `seeds × per_seed` candidates in canonical order with 4 to 12 words each.
pub fn candidates(seeds: usize, per_seed: usize, seed: u64) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(seeds * per_seed);
    for seed_id in 0..seeds {
        for completion_index in 0..per_seed {
            let n = rng.random_range(4..=12);
            let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            out.push(Candidate {
                seed_id,
                completion_index,
                text: format!("{}.", words.join(" ")),
            });
        }
    }
    out
}

/// `n` users per class with scores drawn around `mu_pos` and `mu_neg`.
pub fn scores(n: usize, mu_pos: f64, mu_neg: f64, seed: u64) -> Vec<(f64, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = move |mu: f64| (mu + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0);
    let mut out: Vec<(f64, Label)> = (0..n).map(|_| (jitter(mu_pos), Label::Positive)).collect();
    out.extend((0..n).map(|_| (jitter(mu_neg), Label::Negative)));
    out
}

//! Word/sentence embedding providers.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::text::{self, StopWords};

pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;

    fn dimension(&self) -> usize;

    /// Vector for a normalised word, or `None` when out of vocabulary.
    fn embed_word(&self, word: &str) -> Option<Vec<f64>>;

    /// Sentence representation. Defaults to [`mean_word_vector`]; whole-sentence
    /// encoders override this.
    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        Ok(mean_word_vector(self, text))
    }
}

/// Normalised mean of the embeddings of the non-stop-word tokens of `text`.
/// Returns the zero vector when no token is embeddable.
pub fn mean_word_vector<E: Embedder + ?Sized>(embedder: &E, text: &str) -> Vec<f64> {
    let stop = StopWords::english();
    let mut sum = vec![0.0; embedder.dimension()];
    let mut n = 0usize;
    for w in text::words(text) {
        if stop.contains(&w) {
            continue;
        }
        if let Some(v) = embedder.embed_word(&w) {
            debug_assert_eq!(v.len(), sum.len());
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    l2_normalize(sum)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit-length copy of `v`; the zero vector maps to itself.
pub fn l2_normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

/// Fixed word → vector table. Words missing from the table are OOV.
#[derive(Debug, Clone)]
pub struct TableEmbedder {
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn new<I, S>(dimension: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let table = entries
            .into_iter()
            .map(|(w, v)| {
                assert_eq!(v.len(), dimension, "vector for `{}` has wrong dimension", w.as_ref());
                (text::normalize_word(w.as_ref()), v)
            })
            .collect();
        Self { dimension, table }
    }
}

impl Embedder for TableEmbedder {
    fn id(&self) -> &str {
        "mock-table"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_word(&self, word: &str) -> Option<Vec<f64>> {
        self.table.get(word).cloned()
    }
}

/// Deterministic pseudo-random embedding: every word maps to a fixed vector
/// with components uniform in [-1, 1], keyed by a SHA-256 of the word.
/// Distinct words are nearly orthogonal in high dimension.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    salt: String,
}

pub const HASHING_EMBEDDER_ID: &str = "mock-hash";

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self::with_salt(dimension, "")
    }

    pub fn with_salt(dimension: usize, salt: impl Into<String>) -> Self {
        assert!(dimension >= 1);
        Self {
            dimension,
            salt: salt.into(),
        }
    }
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> &str {
        HASHING_EMBEDDER_ID
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_word(&self, word: &str) -> Option<Vec<f64>> {
        let digest = Sha256::new()
            .chain_update(self.salt.as_bytes())
            .chain_update([0u8])
            .chain_update(word.as_bytes())
            .finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        Some((0..self.dimension).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }
}

//! Lexicon-vector scoring and per-seed top-m selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{self, Embedder, l2_normalize};
use crate::error::{Error, Result};
use crate::generation::Candidate;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalityLexicon {
    name: String,
    words: Vec<String>,
}

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.txt");

impl PersonalityLexicon {
    /// Case-folds `words`; rejects an empty list and duplicates.
    pub fn new<I, S>(name: impl Into<String>, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut folded = Vec::new();
        for w in words {
            let w = text::normalize_word(w.as_ref());
            if w.is_empty() {
                continue;
            }
            if !seen.insert(w.clone()) {
                return Err(Error::Config(format!("lexicon word `{w}` is listed twice")));
            }
            folded.push(w);
        }
        if folded.is_empty() {
            return Err(Error::Config("lexicon has no words".into()));
        }
        Ok(Self {
            name: name.into(),
            words: folded,
        })
    }

    /// The bundled 28-word psychopathy lexicon.
    pub fn paper_default() -> Self {
        parse_lexicon("psychopathic", DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// One word per line; `#` starts a comment.
pub fn parse_lexicon(name: &str, body: &str) -> Result<PersonalityLexicon> {
    let words = body
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    PersonalityLexicon::new(name, words)
}

pub fn load_lexicon(path: &Path) -> Result<PersonalityLexicon> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("lexicon");
    parse_lexicon(name, &body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconVector {
    pub vector: Vec<f64>,
    /// Lexicon words the embedder did not know.
    pub out_of_vocabulary: Vec<String>,
}

/// Normalised mean of the lexicon word vectors. Out-of-vocabulary words are
/// skipped and reported; a fully out-of-vocabulary lexicon is a config error.
pub fn lexicon_vector(lexicon: &PersonalityLexicon, embedder: &dyn Embedder) -> Result<LexiconVector> {
    let mut sum = vec![0.0; embedder.dimension()];
    let mut used = 0usize;
    let mut oov = Vec::new();
    for w in lexicon.words() {
        match embedder.embed_word(w) {
            Some(v) => {
                for (s, x) in sum.iter_mut().zip(&v) {
                    *s += x;
                }
                used += 1;
            }
            None => oov.push(w.clone()),
        }
    }
    if used == 0 {
        return Err(Error::Config(format!(
            "every word of lexicon `{}` is out of vocabulary for embedder `{}`",
            lexicon.name(),
            embedder.id()
        )));
    }
    for s in &mut sum {
        *s /= used as f64;
    }
    Ok(LexiconVector {
        vector: l2_normalize(sum),
        out_of_vocabulary: oov,
    })
}

/// Normalised mean of the non-stop-word token embeddings; zero vector when
/// nothing is embeddable.
pub fn sentence_vector(text: &str, embedder: &dyn Embedder) -> Vec<f64> {
    embedding::mean_word_vector(embedder, text)
}

/// Cosine similarity, defined as 0 when either vector is zero.
///
/// # Panics
///
/// On dimension mismatch.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different dimensions");
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    #[serde(flatten)]
    pub candidate: Candidate,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub m_per_seed: usize,
    pub k_total: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            m_per_seed: 50,
            k_total: 2000,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_per_seed < 1 {
            return Err(Error::Config("selection.m_per_seed: must be >= 1".into()));
        }
        if self.k_total < self.m_per_seed {
            return Err(Error::Config("selection.k_total: must be >= m_per_seed".into()));
        }
        Ok(())
    }
}

pub fn score_candidates(
    candidates: &[Candidate],
    lexvec: &[f64],
    embedder: &dyn Embedder,
) -> Result<Vec<ScoredCandidate>> {
    candidates
        .par_iter()
        .map(|c| {
            let v = embedder.embed_text(&c.text)?;
            Ok(ScoredCandidate {
                candidate: c.clone(),
                score: cosine(&v, lexvec),
            })
        })
        .collect()
}

/// Higher score first; ties by canonical `(seed_id, completion_index)`.
pub fn by_score_desc(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.candidate.seed_id.cmp(&b.candidate.seed_id))
        .then(a.candidate.completion_index.cmp(&b.candidate.completion_index))
}

/// Keeps the best `m_per_seed` per seed, caps the union at `k_total` by score,
/// and returns it ordered by `(seed_id, score desc, completion_index)`.
pub fn select(scored: Vec<ScoredCandidate>, config: &SelectionConfig) -> Vec<ScoredCandidate> {
    let mut per_seed: BTreeMap<usize, Vec<ScoredCandidate>> = BTreeMap::new();
    for s in scored {
        per_seed.entry(s.candidate.seed_id).or_default().push(s);
    }
    let mut chosen: Vec<ScoredCandidate> = per_seed
        .into_values()
        .flat_map(|mut group| {
            group.sort_by(by_score_desc);
            group.truncate(config.m_per_seed);
            group
        })
        .collect();
    if chosen.len() > config.k_total {
        chosen.sort_by(by_score_desc);
        chosen.truncate(config.k_total);
    }
    chosen.sort_by(|a, b| a.candidate.seed_id.cmp(&b.candidate.seed_id).then_with(|| by_score_desc(a, b)));
    chosen
}

pub fn rank_and_select(
    survivors: &[Candidate],
    lexvec: &[f64],
    embedder: &dyn Embedder,
    config: &SelectionConfig,
) -> Result<Vec<ScoredCandidate>> {
    config.validate()?;
    Ok(select(score_candidates(survivors, lexvec, embedder)?, config))
}

//! Candidate filtering.
//!
//! Rules, applied in this order and attributed to the first one that fires:
//!
//! 1. contains a banned word (case-insensitive, on word boundaries);
//! 2. exact duplicate (case-folded) of an earlier candidate;
//! 3. fewer than `min_words` tokens;
//! 4. last token is a stop word;
//! 5. sentiment is not more negative than positive;
//! 6. cosine similarity to an earlier survivor at or above the paraphrase threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedder;
use crate::error::{Error, Result};
use crate::generation::Candidate;
use crate::ranking::cosine;
use crate::sentiment::{SentimentAnalyzer, SentimentScores};
use crate::text::{self, StopWords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParaphraseScope {
    /// Compare against every earlier survivor.
    Pool,
    /// Compare only against earlier survivors of the same seed.
    PerSeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub banned_words: BTreeSet<String>,
    pub min_words: usize,
    pub stopword_list_id: String,
    pub sentiment_rule_enabled: bool,
    pub paraphrase_threshold: f64,
    pub paraphrase_scope: ParaphraseScope,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            banned_words: ["psychopath", "antisocial", "sociopath"].map(String::from).into(),
            min_words: 3,
            stopword_list_id: text::DEFAULT_STOPWORD_LIST.to_string(),
            sentiment_rule_enabled: true,
            paraphrase_threshold: 0.90,
            paraphrase_scope: ParaphraseScope::Pool,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words < 1 {
            return Err(Error::Config("filter.min_words: must be >= 1".into()));
        }
        if !(self.paraphrase_threshold > 0.0 && self.paraphrase_threshold <= 1.0) {
            return Err(Error::Config("filter.paraphrase_threshold: must be in (0, 1]".into()));
        }
        if StopWords::by_id(&self.stopword_list_id).is_none() {
            return Err(Error::Config(format!(
                "filter.stopword_list_id: unknown list `{}`",
                self.stopword_list_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum FilterRule {
    BannedWord = 1,
    Duplicate = 2,
    TooShort = 3,
    StopWordEnding = 4,
    Sentiment = 5,
    Paraphrase = 6,
}

impl FilterRule {
    pub const ALL: [FilterRule; 6] = [
        FilterRule::BannedWord,
        FilterRule::Duplicate,
        FilterRule::TooShort,
        FilterRule::StopWordEnding,
        FilterRule::Sentiment,
        FilterRule::Paraphrase,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn key(self) -> String {
        format!("rule{}", self.number())
    }

    pub fn description(self) -> &'static str {
        match self {
            FilterRule::BannedWord => "include the trivial words",
            FilterRule::Duplicate => "are duplicates of other sentences",
            FilterRule::TooShort => "contain less than three words",
            FilterRule::StopWordEnding => "end with a stop word",
            FilterRule::Sentiment => {
                "are emotionally neutral or have a higher positive than a negative sentiment"
            }
            FilterRule::Paraphrase => "are simple paraphrases of each other",
        }
    }
}

impl From<FilterRule> for u8 {
    fn from(r: FilterRule) -> u8 {
        r.number()
    }
}

impl TryFrom<u8> for FilterRule {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        FilterRule::ALL
            .get((n as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("filter rule must be 1..=6, got {n}"))
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} ({})", self.number(), self.description())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub seed_id: usize,
    pub completion_index: usize,
    pub kept: bool,
    pub removed_by: Option<FilterRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    #[serde(rename = "input")]
    pub input_count: usize,
    #[serde(rename = "survivors")]
    pub survivor_count: usize,
    /// `rule1`..`rule6` → number removed; every key is present.
    pub removed: BTreeMap<String, usize>,
    pub verdicts: Vec<FilterVerdict>,
}

impl FilterReport {
    pub fn removed_by(&self, rule: FilterRule) -> usize {
        self.removed.get(&rule.key()).copied().unwrap_or(0)
    }

    pub fn total_removed(&self) -> usize {
        self.removed.values().sum()
    }
}

/// Keep iff the text is more negative than positive. Ties and fully neutral
/// scores are dropped.
pub fn sentiment_keep(scores: &SentimentScores) -> bool {
    scores.negative > scores.positive
}

/// Greedy first-keeper scan: index `i` is kept iff its cosine similarity to
/// every previously kept vector is below `threshold`.
pub fn greedy_keep(vectors: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let near = |&j: &usize| cosine(v, &vectors[j]) >= threshold;
        let duplicate = if kept.len() > 512 {
            kept.par_iter().any(near)
        } else {
            kept.iter().any(near)
        };
        if !duplicate {
            kept.push(i);
        }
    }
    kept
}

/// Indices of `texts` that survive paraphrase removal under `embedder`.
pub fn paraphrase_filter(texts: &[&str], embedder: &dyn Embedder, threshold: f64) -> Result<Vec<usize>> {
    let vectors = texts
        .par_iter()
        .map(|t| embedder.embed_text(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(greedy_keep(&vectors, threshold))
}

struct Rules<'a> {
    config: &'a FilterConfig,
    banned: Option<Regex>,
    stop: &'static StopWords,
}

impl<'a> Rules<'a> {
    fn new(config: &'a FilterConfig) -> Result<Self> {
        config.validate()?;
        let banned = if config.banned_words.is_empty() {
            None
        } else {
            let alternation = config
                .banned_words
                .iter()
                .map(|w| regex::escape(&w.to_lowercase()))
                .collect::<Vec<_>>()
                .join("|");
            Some(Regex::new(&format!(r"(?i)\b(?:{alternation})\b")).map_err(|e| Error::Config(e.to_string()))?)
        };
        Ok(Self {
            config,
            banned,
            stop: StopWords::by_id(&config.stopword_list_id).expect("validated"),
        })
    }

    fn banned_word(&self, t: &str) -> bool {
        self.banned.as_ref().is_some_and(|re| re.is_match(t))
    }

    fn too_short(&self, t: &str) -> bool {
        text::token_count(t) < self.config.min_words
    }

    fn stop_word_ending(&self, t: &str) -> bool {
        text::tokens(t)
            .last()
            .map(text::normalize_word)
            .is_some_and(|w| self.stop.contains(&w))
    }
}

fn check_canonical(candidates: &[Candidate]) -> Result<()> {
    for w in candidates.windows(2) {
        if (w[0].seed_id, w[0].completion_index) >= (w[1].seed_id, w[1].completion_index) {
            return Err(Error::Precondition(format!(
                "candidates not in canonical order at ({}, {})",
                w[1].seed_id, w[1].completion_index
            )));
        }
    }
    Ok(())
}

/// Applies the six rules and returns survivors in input order with a report.
pub fn apply_filters(
    candidates: &[Candidate],
    config: &FilterConfig,
    sentiment: &dyn SentimentAnalyzer,
    embedder: &dyn Embedder,
) -> Result<(Vec<Candidate>, FilterReport)> {
    check_canonical(candidates)?;
    let rules = Rules::new(config)?;

    let cheap: Vec<(bool, bool, bool)> = candidates
        .par_iter()
        .map(|c| (rules.banned_word(&c.text), rules.too_short(&c.text), rules.stop_word_ending(&c.text)))
        .collect();

    let mut verdict: Vec<Option<FilterRule>> = Vec::with_capacity(candidates.len());
    let mut seen = HashSet::new();
    for (c, &(r1, r3, r4)) in candidates.iter().zip(&cheap) {
        let r2 = !seen.insert(text::fold_key(&c.text));
        verdict.push(if r1 {
            Some(FilterRule::BannedWord)
        } else if r2 {
            Some(FilterRule::Duplicate)
        } else if r3 {
            Some(FilterRule::TooShort)
        } else if r4 {
            Some(FilterRule::StopWordEnding)
        } else {
            None
        });
    }

    if config.sentiment_rule_enabled {
        let pending: Vec<usize> = (0..candidates.len()).filter(|&i| verdict[i].is_none()).collect();
        let keep = pending
            .par_iter()
            .map(|&i| sentiment.scores(&candidates[i].text).map(|s| sentiment_keep(&s)))
            .collect::<Result<Vec<bool>>>()?;
        for (&i, k) in pending.iter().zip(keep) {
            if !k {
                verdict[i] = Some(FilterRule::Sentiment);
            }
        }
    }

    let pending: Vec<usize> = (0..candidates.len()).filter(|&i| verdict[i].is_none()).collect();
    let vectors = pending
        .par_iter()
        .map(|&i| embedder.embed_text(&candidates[i].text))
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<Vec<usize>> = match config.paraphrase_scope {
        ParaphraseScope::Pool => vec![(0..pending.len()).collect()],
        ParaphraseScope::PerSeed => {
            let mut by_seed: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (k, &i) in pending.iter().enumerate() {
                by_seed.entry(candidates[i].seed_id).or_default().push(k);
            }
            by_seed.into_values().collect()
        }
    };
    for group in groups {
        let vs: Vec<Vec<f64>> = group.iter().map(|&k| vectors[k].clone()).collect();
        let kept: HashSet<usize> = greedy_keep(&vs, config.paraphrase_threshold).into_iter().collect();
        for (pos, &k) in group.iter().enumerate() {
            if !kept.contains(&pos) {
                verdict[pending[k]] = Some(FilterRule::Paraphrase);
            }
        }
    }

    let mut removed: BTreeMap<String, usize> = FilterRule::ALL.iter().map(|r| (r.key(), 0)).collect();
    let mut survivors = Vec::new();
    let mut verdicts = Vec::with_capacity(candidates.len());
    for (c, v) in candidates.iter().zip(verdict) {
        match v {
            Some(rule) => *removed.get_mut(&rule.key()).unwrap() += 1,
            None => survivors.push(c.clone()),
        }
        verdicts.push(FilterVerdict {
            seed_id: c.seed_id,
            completion_index: c.completion_index,
            kept: v.is_none(),
            removed_by: v,
        });
    }
    let report = FilterReport {
        input_count: candidates.len(),
        survivor_count: survivors.len(),
        removed,
        verdicts,
    };
    Ok((survivors, report))
}

/// Per-rule counts from a list of verdicts; used to audit reports.
pub fn tally(verdicts: &[FilterVerdict]) -> HashMap<FilterRule, usize> {
    let mut out = HashMap::new();
    for v in verdicts {
        if let Some(r) = v.removed_by {
            *out.entry(r).or_default() += 1;
        }
    }
    out
}

//! Sentiment estimation providers.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

impl SentimentScores {
    pub fn new(positive: f64, negative: f64, neutral: f64) -> Result<Self> {
        for (name, v) in [("positive", positive), ("negative", negative), ("neutral", neutral)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Precondition(format!("sentiment {name} score {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            positive,
            negative,
            neutral,
        })
    }
}

pub trait SentimentAnalyzer: Send + Sync {
    fn id(&self) -> &str;
    fn scores(&self, text: &str) -> Result<SentimentScores>;
}

/// Bag-of-words polarity scorer over small bundled word lists.
///
/// Each component is the fraction of normalised tokens in that class. A
/// polarity word directly preceded by a negator ("not", "never", "no", ...)
/// counts toward the opposite class.
#[derive(Debug, Clone)]
pub struct LexiconSentiment {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

pub const LEXICON_SENTIMENT_ID: &str = "lexicon";

const POSITIVE_WORDS: &[&str] = &[
    "good", "great", "happy", "love", "loved", "loving", "kind", "kindness", "nice", "wonderful",
    "beautiful", "joy", "joyful", "glad", "grateful", "thankful", "thanks", "hope", "hopeful",
    "friend", "friends", "friendly", "care", "caring", "help", "helpful", "support", "trust",
    "honest", "calm", "peace", "peaceful", "safe", "fun", "enjoy", "excellent", "amazing",
    "awesome", "best", "better", "smile", "laugh", "warm", "gentle", "generous", "sweet",
    "proud", "success", "win", "brave", "fine", "pleasant", "fair", "delight", "delighted",
    "compassion", "empathy", "forgive", "relaxed", "cheerful", "lucky", "respect",
];

const NEGATIVE_WORDS: &[&str] = &[
    "bad", "hate", "hated", "angry", "anger", "cruel", "cruelty", "evil", "kill", "killed",
    "killing", "murder", "hurt", "pain", "suffer", "suffering", "weak", "stupid", "selfish",
    "greedy", "violent", "violence", "abuse", "abusive", "manipulate", "manipulative", "lie",
    "liar", "lies", "fear", "afraid", "scared", "terrible", "horrible", "awful", "disgusting",
    "worthless", "useless", "pathetic", "destroy", "destruction", "torture", "rape", "blood",
    "dead", "death", "die", "sad", "miserable", "lonely", "empty", "bored", "boring", "guilt",
    "shame", "remorse", "harm", "hostile", "aggressive", "sadistic", "dangerous", "threat",
    "attack", "victim", "prey", "predator", "deceptive", "deceive", "exploit", "exploitative",
    "arrogant", "childish", "untrustworthy", "irresponsible", "inconsiderate", "helpless",
    "vulnerable", "crime", "criminal", "prison", "monster", "insane", "fight", "revenge",
    "punish", "nasty", "mean", "ugly", "wrong", "fail", "failure", "worse", "worst", "hunt",
    "trap", "fool", "fools", "sheep", "disgust", "contempt", "despise", "annoying", "problem",
];

const NEGATORS: &[&str] = &["not", "no", "never", "don't", "dont", "can't", "cannot", "won't", "isn't", "aren't", "nothing"];

impl Default for LexiconSentiment {
    fn default() -> Self {
        Self {
            positive: POSITIVE_WORDS.iter().map(|w| w.to_string()).collect(),
            negative: NEGATIVE_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl SentimentAnalyzer for LexiconSentiment {
    fn id(&self) -> &str {
        LEXICON_SENTIMENT_ID
    }

    fn scores(&self, input: &str) -> Result<SentimentScores> {
        let words = text::words(input);
        if words.is_empty() {
            return SentimentScores::new(0.0, 0.0, 1.0);
        }
        let (mut pos, mut neg) = (0usize, 0usize);
        for (i, w) in words.iter().enumerate() {
            let negated = i > 0 && NEGATORS.contains(&words[i - 1].as_str());
            let polarity = if self.positive.contains(w) {
                1
            } else if self.negative.contains(w) {
                -1
            } else {
                0
            };
            match (polarity, negated) {
                (1, false) | (-1, true) => pos += 1,
                (-1, false) | (1, true) => neg += 1,
                _ => {}
            }
        }
        let n = words.len() as f64;
        let (p, q) = (pos as f64 / n, neg as f64 / n);
        SentimentScores::new(p, q, (1.0 - p - q).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_fractions() {
        let s = LexiconSentiment::default();
        let r = s.scores("People are cruel and weak").unwrap();
        assert_eq!(r.negative, 0.4);
        assert_eq!(r.positive, 0.0);
        assert!((r.neutral - 0.6).abs() < 1e-12);
        let r = s.scores("I love my friends").unwrap();
        assert!(r.positive > r.negative);
    }

    #[test]
    fn negation_flips() {
        let s = LexiconSentiment::default();
        let r = s.scores("they are not kind").unwrap();
        assert!(r.negative > r.positive);
    }

    #[test]
    fn empty_text_is_neutral() {
        let r = LexiconSentiment::default().scores("...").unwrap();
        assert_eq!((r.positive, r.negative, r.neutral), (0.0, 0.0, 1.0));
    }

    #[test]
    fn scores_are_range_checked() {
        assert!(SentimentScores::new(1.2, 0.0, 0.0).is_err());
    }
}

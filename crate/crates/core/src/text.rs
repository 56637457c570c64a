//! Tokenisation and word normalisation shared by every stage.
//!
//! A token is a maximal run of non-whitespace characters. Word comparison uses
//! [`normalize_word`]: case-folded, typographic apostrophes mapped to ASCII,
//! leading and trailing punctuation stripped.

use std::collections::HashSet;
use std::sync::LazyLock;

pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Case-folds and collapses whitespace; the key used for exact-duplicate checks.
pub fn fold_key(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for tok in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(tok.chars().flat_map(char::to_lowercase));
    }
    out
}

pub fn normalize_word(token: &str) -> String {
    token
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == '\u{2019}' || c == '\u{2018}' { '\'' } else { c })
        .collect::<String>()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Normalised words of `text`, dropping tokens that are pure punctuation.
pub fn words(text: &str) -> Vec<String> {
    tokens(text)
        .map(normalize_word)
        .filter(|w| !w.is_empty())
        .collect()
}

pub const DEFAULT_STOPWORD_LIST: &str = "english-standard";

/// Pinned English function-word list (179 entries).
const ENGLISH_STANDARD: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan",
    "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't",
    "wouldn", "wouldn't",
];

static ENGLISH_STANDARD_SET: LazyLock<StopWords> = LazyLock::new(|| StopWords {
    id: DEFAULT_STOPWORD_LIST.to_string(),
    words: ENGLISH_STANDARD.iter().map(|w| w.to_string()).collect(),
});

#[derive(Debug, Clone)]
pub struct StopWords {
    id: String,
    words: HashSet<String>,
}

impl StopWords {
    pub fn english() -> &'static StopWords {
        &ENGLISH_STANDARD_SET
    }

    /// Looks up a bundled list by id.
    pub fn by_id(id: &str) -> Option<&'static StopWords> {
        (id == DEFAULT_STOPWORD_LIST).then(StopWords::english)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `word` must already be normalised.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_list_is_pinned() {
        assert_eq!(StopWords::english().len(), 179);
        assert_eq!(ENGLISH_STANDARD.len(), 179);
        assert!(StopWords::english().contains("the"));
        assert!(!StopWords::english().contains("destroy"));
        assert!(StopWords::by_id("klingon").is_none());
    }

    #[test]
    fn normalize_strips_edges_only() {
        assert_eq!(normalize_word("\"Don\u{2019}t!\""), "don't");
        assert_eq!(normalize_word("the."), "the");
        assert_eq!(normalize_word("..."), "");
        assert_eq!(normalize_word("Self-Made"), "self-made");
    }

    #[test]
    fn fold_key_collapses_case_and_space() {
        assert_eq!(fold_key("  Hi   THERE "), "hi there");
        assert_eq!(token_count(" a  b\tc\n"), 3);
    }
}

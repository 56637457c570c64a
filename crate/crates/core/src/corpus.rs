//! Corpus ingestion and cleaning.
//!
//! Raw documents arrive as JSONL records with a `text` field. Cleaning strips
//! hyperlinks, emoji, spam boilerplate and redundant whitespace, optionally
//! normalises spelling, and the result is split into sentences and
//! deduplicated into the preliminary corpus.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::{Arc, LazyLock};

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_lines;
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub source_tag: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanSentence {
    pub sentence_id: String,
    pub text: String,
    pub source_tag: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    #[serde(rename = "documents")]
    pub document_count: usize,
    #[serde(rename = "sentences")]
    pub sentence_count: usize,
    #[serde(rename = "tokens")]
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub enable_spellcheck: bool,
    pub enable_emoji_removal: bool,
    pub enable_link_removal: bool,
    pub enable_spam_removal: bool,
    pub enable_dedup: bool,
    /// Case-insensitive regular expressions removed when spam removal is on.
    pub spam_patterns: Vec<String>,
}

pub const DEFAULT_SPAM_PATTERNS: &[&str] = &[
    r"\[deleted\]",
    r"\[removed\]",
    r"i am a bot,? and this action was performed automatically\.?",
    r"please \[?contact the moderators[^.\n]*\.?",
    r"(?:this|your) (?:post|comment|submission) has been removed[^.\n]*\.?",
    r"beep,? boop[^.\n]*\.?",
    r"\^\^\^\S*",
];

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            enable_spellcheck: true,
            enable_emoji_removal: true,
            enable_link_removal: true,
            enable_spam_removal: true,
            enable_dedup: true,
            spam_patterns: DEFAULT_SPAM_PATTERNS.iter().map(|p| p.to_string()).collect(),
        }
    }
}

/// Records dropped by [`ingest`], with 0-based line numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped: usize,
    pub entries: Vec<SkippedRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

impl SkipReport {
    fn push(&mut self, line: usize, reason: impl Into<String>) {
        self.skipped += 1;
        self.entries.push(SkippedRecord {
            line,
            reason: reason.into(),
        });
    }
}

/// Reads a JSONL file into documents with ids `<source_tag>:<line>`.
///
/// Blank lines are ignored. Records that are not JSON objects or lack a
/// non-empty string `text` are skipped and reported.
pub fn ingest(path: &Path, source_tag: &str) -> Result<(Vec<RawDocument>, SkipReport)> {
    let mut docs = Vec::new();
    let mut report = SkipReport::default();
    for (line_no, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                report.push(line_no, format!("malformed JSON: {e}"));
                continue;
            }
        };
        let Some(obj) = value.as_object() else {
            report.push(line_no, "record is not an object");
            continue;
        };
        let text = match obj.get("text").and_then(|t| t.as_str()) {
            Some(t) if !t.trim().is_empty() => t.to_string(),
            Some(_) => {
                report.push(line_no, "empty `text`");
                continue;
            }
            None => {
                report.push(line_no, "missing string field `text`");
                continue;
            }
        };
        let metadata = ["source", "author", "created_at"]
            .into_iter()
            .filter_map(|key| {
                let v = obj.get(key)?;
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Null => return None,
                    other => other.to_string(),
                };
                Some((key.to_string(), s))
            })
            .collect();
        docs.push(RawDocument {
            doc_id: format!("{source_tag}:{line_no}"),
            source_tag: source_tag.to_string(),
            text,
            metadata,
        });
    }
    Ok((docs, report))
}

pub trait SpellingNormalizer: Send + Sync {
    fn normalize(&self, text: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoopSpeller;

impl SpellingNormalizer for NoopSpeller {
    fn normalize(&self, text: &str) -> String {
        text.to_string()
    }
}

/// Word-level correction table. Surrounding punctuation is preserved and the
/// replacement is capitalised when the original token was.
#[derive(Debug, Clone, Default)]
pub struct ReplacementSpeller {
    corrections: BTreeMap<String, String>,
}

impl ReplacementSpeller {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        Self {
            corrections: pairs
                .into_iter()
                .map(|(k, v)| (text::normalize_word(k.as_ref()), v.into()))
                .collect(),
        }
    }
}

impl SpellingNormalizer for ReplacementSpeller {
    fn normalize(&self, input: &str) -> String {
        let fixed: Vec<String> = text::tokens(input)
            .map(|tok| {
                let key = text::normalize_word(tok);
                let Some(repl) = self.corrections.get(&key) else {
                    return tok.to_string();
                };
                let start = tok.find(|c: char| c.is_alphanumeric()).unwrap_or(0);
                let end = tok
                    .rfind(|c: char| c.is_alphanumeric())
                    .map(|i| i + tok[i..].chars().next().map_or(1, char::len_utf8))
                    .unwrap_or(tok.len());
                let core = &tok[start..end];
                let repl = if core.chars().next().is_some_and(char::is_uppercase) {
                    let mut cs = repl.chars();
                    cs.next()
                        .map(|f| f.to_uppercase().chain(cs).collect())
                        .unwrap_or_default()
                } else {
                    repl.clone()
                };
                format!("{}{}{}", &tok[..start], repl, &tok[end..])
            })
            .collect();
        fixed.join(" ")
    }
}

static MARKDOWN_LINK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\[([^\]\[]*)\]\((?:[a-z][a-z0-9+.\-]*://|www\.)[^)\s]*\)").unwrap()
});

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:[a-z][a-z0-9+.\-]*://|\bwww\.)\S+").unwrap());

pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF   // pictographs, emoticons, transport, flags, supplemental
        | 0x2600..=0x27BF   // misc symbols, dingbats
        | 0x2300..=0x23FF   // misc technical (watch, hourglass, ...)
        | 0x2B00..=0x2BFF   // arrows and stars
        | 0xFE00..=0xFE0F   // variation selectors
        | 0x200D            // zero-width joiner
        | 0x20E3            // keycap
        | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0xE0020..=0xE007F // tag sequences
    )
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Compiled cleaning procedure. Construct once and reuse across documents.
pub struct Cleaner {
    config: CleaningConfig,
    spam: Vec<Regex>,
    speller: Arc<dyn SpellingNormalizer>,
}

impl std::fmt::Debug for Cleaner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cleaner").field("config", &self.config).finish()
    }
}

const MAX_CLEAN_PASSES: usize = 16;

impl Cleaner {
    pub fn new(config: CleaningConfig) -> Result<Self> {
        Self::with_speller(config, Arc::new(NoopSpeller))
    }

    pub fn with_speller(config: CleaningConfig, speller: Arc<dyn SpellingNormalizer>) -> Result<Self> {
        let spam = config
            .spam_patterns
            .iter()
            .map(|p| {
                Regex::new(&format!("(?i){p}"))
                    .map_err(|e| Error::Config(format!("cleaning.spam_patterns: `{p}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            spam,
            speller,
        })
    }

    pub fn config(&self) -> &CleaningConfig {
        &self.config
    }

    /// Cleans `text`. Removed spans are replaced by a space before whitespace
    /// is collapsed, and passes repeat until the text stops changing, so the
    /// result is a fixed point: cleaning it again returns it unchanged.
    pub fn clean(&self, text: &str) -> String {
        let mut current = collapse_whitespace(text);
        for _ in 0..MAX_CLEAN_PASSES {
            let next = self.pass(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn pass(&self, input: &str) -> String {
        let mut s: String = if self.config.enable_emoji_removal {
            input.chars().map(|c| if is_emoji(c) { ' ' } else { c }).collect()
        } else {
            input.to_string()
        };
        if self.config.enable_link_removal {
            s = MARKDOWN_LINK.replace_all(&s, " $1 ").into_owned();
            s = URL.replace_all(&s, " ").into_owned();
        }
        if self.config.enable_spam_removal {
            for re in &self.spam {
                s = re.replace_all(&s, " ").into_owned();
            }
        }
        let mut s = collapse_whitespace(&s);
        if self.config.enable_spellcheck {
            s = collapse_whitespace(&self.speller.normalize(&s));
        }
        s
    }
}

/// Splits after `.`, `!` or `?` when followed by whitespace or end of input.
/// Runs of terminal punctuation ("?!", "...") stay with their sentence.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let boundary = match iter.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if boundary {
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                out.push(piece.to_string());
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

/// Cleans, segments and deduplicates `docs` into the preliminary corpus.
///
/// Documents are processed in input order; the first occurrence of each
/// case-folded sentence wins. `document_count` counts input documents.
pub fn build_corpus(docs: &[RawDocument], cleaner: &Cleaner) -> (Vec<CleanSentence>, CorpusStats) {
    let per_doc: Vec<Vec<CleanSentence>> = docs
        .par_iter()
        .map(|doc| {
            segment_sentences(&cleaner.clean(&doc.text))
                .into_iter()
                .enumerate()
                .map(|(k, sentence)| CleanSentence {
                    sentence_id: format!("{}#{k}", doc.doc_id),
                    token_count: text::token_count(&sentence),
                    text: sentence,
                    source_tag: doc.source_tag.clone(),
                })
                .collect()
        })
        .collect();

    let mut seen = HashSet::new();
    let mut sentences = Vec::new();
    for s in per_doc.into_iter().flatten() {
        if cleaner.config.enable_dedup && !seen.insert(text::fold_key(&s.text)) {
            continue;
        }
        sentences.push(s);
    }
    let stats = CorpusStats {
        document_count: docs.len(),
        sentence_count: sentences.len(),
        token_count: sentences.iter().map(|s| s.token_count).sum(),
    };
    (sentences, stats)
}

//! Personality data augmentation pipeline.
//!
//! The crate is organised around the pipeline stages:
//!
//! - [`corpus`]: ingest raw JSONL documents and clean them into sentences.
//! - [`generation`]: seed sentences, generator providers, seeded sampling.
//! - [`filtering`]: the six candidate removal rules with an audit report.
//! - [`ranking`]: lexicon-vector cosine scoring and per-seed selection.
//! - [`datasets`]: positive/negative assembly and the pipeline variants.
//! - [`evaluation`]: scorer training, PsychoScores, balanced SVM cross-validation.
//!
//! Every model-dependent step sits behind a provider trait
//! ([`generation::Generator`], [`embedding::Embedder`],
//! [`sentiment::SentimentAnalyzer`], [`evaluation::SentenceClassifier`]) with
//! deterministic mock implementations so that whole runs are reproducible.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod datasets;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod filtering;
pub mod generation;
pub mod io;
pub mod manifest;
pub mod ranking;
pub mod registry;
pub mod rng;
pub mod sentiment;
pub mod svm;
pub mod text;

pub use corpus::{CleanSentence, CleaningConfig, CorpusStats, RawDocument};
pub use datasets::{AugmentedDataset, Label, LabeledSentence, PipelineVariant};
pub use error::{Error, Result};
pub use evaluation::{EvalMetrics, FoldConfig, PsychoScore, SvmConfig, UserRecord};
pub use filtering::{FilterConfig, FilterReport, FilterRule, FilterVerdict};
pub use generation::{Candidate, ModelHandle, SamplingParams, SeedSet, SeedSentence, TrainingConfig};
pub use ranking::{PersonalityLexicon, ScoredCandidate, SelectionConfig};

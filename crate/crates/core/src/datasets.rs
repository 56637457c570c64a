//! Labeled dataset assembly and the three pipeline variants.
//!
//! The positive class is the top of the ranked selection; the negative class
//! is the lowest-scoring part of a seeded sample of background sentences that
//! went through the same filters.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CleanSentence;
use crate::embedding::Embedder;
use crate::error::{Error, Result};
use crate::filtering::{FilterConfig, FilterReport, apply_filters};
use crate::generation::{
    Candidate, GenerationOutput, Generator, ModelHandle, SamplingParams, SeedSet, TrainingConfig,
    candidates_from_corpus, fine_tune, generate_completions,
};
use crate::io;
use crate::ranking::{
    PersonalityLexicon, ScoredCandidate, SelectionConfig, by_score_desc, lexicon_vector, rank_and_select,
    score_candidates,
};
use crate::rng;
use crate::sentiment::SentimentAnalyzer;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: Label,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PipelineVariant {
    /// Full pipeline: fine-tune, generate, filter, rank.
    #[default]
    #[serde(alias = "dexter")]
    Dexter,
    /// Generation from the base model, fine-tuning skipped.
    #[serde(alias = "dexter_minus")]
    DexterMinus,
    /// No generation: the preliminary corpus is filtered and ranked directly.
    #[serde(alias = "prelim")]
    Prelim,
}

impl PipelineVariant {
    /// Dataset display name used in model tags ("Dexter@...").
    pub fn dataset_name(self) -> &'static str {
        match self {
            PipelineVariant::Dexter => "Dexter",
            PipelineVariant::DexterMinus => "Dexter-",
            PipelineVariant::Prelim => "PRELIM",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            PipelineVariant::Dexter => "dexter",
            PipelineVariant::DexterMinus => "dexter_minus",
            PipelineVariant::Prelim => "prelim",
        }
    }
}

impl fmt::Display for PipelineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub variant: PipelineVariant,
    pub config_hash: String,
    pub master_seed: u64,
    pub counts: ClassCounts,
    /// How many sentences each class is short of its target.
    pub shortfalls: ClassCounts,
    /// `None` for PRELIM, which never touches a generator.
    pub fine_tuned: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedDataset {
    pub name: String,
    pub positives: Vec<LabeledSentence>,
    pub negatives: Vec<LabeledSentence>,
    pub manifest: DatasetManifest,
}

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

impl AugmentedDataset {
    pub fn sentences(&self) -> impl Iterator<Item = &LabeledSentence> {
        self.positives.iter().chain(&self.negatives)
    }

    /// Writes `dataset.jsonl` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_jsonl(&dir.join(DATASET_FILE), self.sentences())?;
        io::write_json(&dir.join(MANIFEST_FILE), &self.manifest)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = io::read_json(&dir.join(MANIFEST_FILE))?;
        let rows: Vec<LabeledSentence> = io::read_jsonl(&dir.join(DATASET_FILE))?;
        let (positives, negatives) = rows.into_iter().partition(|r| r.label == Label::Positive);
        Ok(Self {
            name: manifest.name.clone(),
            positives,
            negatives,
            manifest,
        })
    }
}

/// Top `target_count` of `selection` by score (ties by canonical index),
/// labeled positive. Returns the sentences and the shortfall.
pub fn assemble_positive(
    selection: &[ScoredCandidate],
    target_count: usize,
    provenance: &str,
) -> Result<(Vec<LabeledSentence>, usize)> {
    if target_count == 0 {
        return Err(Error::Config("targets.positive: must be >= 1".into()));
    }
    if selection.is_empty() {
        return Err(Error::Data("no ranked candidates to build the positive class from".into()));
    }
    let mut ordered: Vec<&ScoredCandidate> = selection.iter().collect();
    ordered.sort_by(|a, b| by_score_desc(a, b));
    ordered.truncate(target_count);
    let shortfall = target_count - ordered.len();
    let out = ordered
        .into_iter()
        .map(|s| LabeledSentence {
            text: s.candidate.text.clone(),
            label: Label::Positive,
            provenance: format!("{provenance}:seed{}#{}", s.candidate.seed_id, s.candidate.completion_index),
        })
        .collect();
    Ok((out, shortfall))
}

/// Indices of the `k` smallest scores, ascending, ties by index.
pub fn select_lowest(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetTargets {
    pub positive: usize,
    pub negative: usize,
    /// Background sentences sampled before filtering and scoring.
    pub negative_sample: usize,
}

impl Default for DatasetTargets {
    fn default() -> Self {
        Self {
            positive: 1700,
            negative: 1700,
            negative_sample: 8000,
        }
    }
}

impl DatasetTargets {
    pub fn validate(&self) -> Result<()> {
        if self.positive == 0 {
            return Err(Error::Config("targets.positive: must be >= 1".into()));
        }
        if self.negative == 0 {
            return Err(Error::Config("targets.negative: must be >= 1".into()));
        }
        if self.negative > self.negative_sample {
            return Err(Error::Config("targets.negative: must not exceed targets.negative_sample".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeOutcome {
    pub sentences: Vec<LabeledSentence>,
    pub shortfall: usize,
    /// Sampled sentences in pool order, before filtering.
    pub sampled: usize,
    pub filter_report: FilterReport,
}

/// Negative class: seeded uniform sample of `sample_size` pool sentences,
/// minus `exclude` (case-folded texts of the positive class), filtered like
/// the positives, and the `target_count` lowest lexicon scores kept.
#[allow(clippy::too_many_arguments)]
pub fn assemble_negative(
    pool: &[CleanSentence],
    lexvec: &[f64],
    embedder: &dyn Embedder,
    filter_config: &FilterConfig,
    sentiment: &dyn SentimentAnalyzer,
    sample_size: usize,
    target_count: usize,
    master_seed: u64,
    exclude: &HashSet<String>,
) -> Result<NegativeOutcome> {
    if pool.is_empty() {
        return Err(Error::Data("negative sentence pool is empty".into()));
    }
    if target_count == 0 || target_count > sample_size {
        return Err(Error::Config("targets.negative: must be in 1..=negative_sample".into()));
    }
    let mut rng = rng::stream(master_seed, "negatives");
    let mut picked = rand::seq::index::sample(&mut rng, pool.len(), sample_size.min(pool.len())).into_vec();
    picked.sort_unstable();
    let sampled = picked.len();

    let candidates: Vec<Candidate> = picked
        .iter()
        .filter(|&&i| !exclude.contains(&text::fold_key(&pool[i].text)))
        .map(|&i| Candidate {
            seed_id: 0,
            completion_index: i,
            text: pool[i].text.clone(),
        })
        .collect();
    let (survivors, filter_report) = apply_filters(&candidates, filter_config, sentiment, embedder)?;
    let scored = score_candidates(&survivors, lexvec, embedder)?;
    let scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
    let chosen = select_lowest(&scores, target_count);
    let shortfall = target_count - chosen.len();
    let sentences = chosen
        .into_iter()
        .map(|k| {
            let src = &pool[scored[k].candidate.completion_index];
            LabeledSentence {
                text: src.text.clone(),
                label: Label::Negative,
                provenance: format!("negative:{}", src.sentence_id),
            }
        })
        .collect();
    Ok(NegativeOutcome {
        sentences,
        shortfall,
        sampled,
        filter_report,
    })
}

/// Everything a variant run needs.
pub struct VariantInputs<'a> {
    pub corpus: &'a [CleanSentence],
    pub negative_pool: &'a [CleanSentence],
    pub seeds: &'a SeedSet,
    pub lexicon: &'a PersonalityLexicon,
    pub generator: &'a dyn Generator,
    pub embedder: &'a dyn Embedder,
    pub sentiment: &'a dyn SentimentAnalyzer,
    pub training: &'a TrainingConfig,
    pub sampling: &'a SamplingParams,
    pub filter: &'a FilterConfig,
    pub selection: &'a SelectionConfig,
    pub targets: &'a DatasetTargets,
    pub master_seed: u64,
    pub config_hash: String,
}

/// Intermediate products of a variant run, one per pipeline stage.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub model: Option<ModelHandle>,
    pub generation: GenerationOutput,
    pub survivors: Vec<Candidate>,
    pub filter_report: FilterReport,
    pub scored: Vec<ScoredCandidate>,
    pub negative_filter_report: FilterReport,
    pub dataset: AugmentedDataset,
}

/// Model stage: fine-tuned (DEXTER), base (DEXTER_MINUS) or none (PRELIM).
pub fn model_for_variant(
    variant: PipelineVariant,
    generator: &dyn Generator,
    corpus: &[CleanSentence],
    training: &TrainingConfig,
) -> Result<Option<ModelHandle>> {
    match variant {
        PipelineVariant::Dexter => fine_tune(generator, corpus, training).map(Some),
        PipelineVariant::DexterMinus => Ok(Some(generator.base_model())),
        PipelineVariant::Prelim => Ok(None),
    }
}

/// Candidate stage. PRELIM maps the corpus onto a single synthetic seed.
pub fn candidates_for_variant(
    generator: &dyn Generator,
    model: Option<&ModelHandle>,
    corpus: &[CleanSentence],
    seeds: &SeedSet,
    sampling: &SamplingParams,
) -> Result<GenerationOutput> {
    match model {
        Some(handle) => generate_completions(generator, handle, seeds, sampling),
        None => Ok(GenerationOutput {
            candidates: candidates_from_corpus(corpus),
            failures: 0,
        }),
    }
}

/// PRELIM has one synthetic seed, so its per-seed cap is lifted to `k_total`.
pub fn selection_for_variant(variant: PipelineVariant, selection: &SelectionConfig) -> SelectionConfig {
    match variant {
        PipelineVariant::Prelim => SelectionConfig {
            m_per_seed: selection.k_total,
            k_total: selection.k_total,
        },
        _ => selection.clone(),
    }
}

/// Final assembly: positives from `scored`, negatives from the pool.
#[allow(clippy::too_many_arguments)]
pub fn assemble_dataset(
    variant: PipelineVariant,
    model: Option<&ModelHandle>,
    scored: &[ScoredCandidate],
    negative_pool: &[CleanSentence],
    lexvec: &[f64],
    embedder: &dyn Embedder,
    sentiment: &dyn SentimentAnalyzer,
    filter: &FilterConfig,
    targets: &DatasetTargets,
    master_seed: u64,
    config_hash: &str,
) -> Result<(AugmentedDataset, FilterReport)> {
    targets.validate()?;
    let (positives, pos_short) = assemble_positive(scored, targets.positive, variant.slug())?;
    let exclude: HashSet<String> = positives.iter().map(|p| text::fold_key(&p.text)).collect();
    let neg = assemble_negative(
        negative_pool,
        lexvec,
        embedder,
        filter,
        sentiment,
        targets.negative_sample,
        targets.negative,
        master_seed,
        &exclude,
    )?;
    let manifest = DatasetManifest {
        name: variant.dataset_name().to_string(),
        variant,
        config_hash: config_hash.to_string(),
        master_seed,
        counts: ClassCounts {
            positive: positives.len(),
            negative: neg.sentences.len(),
        },
        shortfalls: ClassCounts {
            positive: pos_short,
            negative: neg.shortfall,
        },
        fine_tuned: model.map(|m| m.fine_tuned),
    };
    Ok((
        AugmentedDataset {
            name: manifest.name.clone(),
            positives,
            negatives: neg.sentences,
            manifest,
        },
        neg.filter_report,
    ))
}

/// Runs one variant end to end in memory.
pub fn run_variant(variant: PipelineVariant, inputs: &VariantInputs<'_>) -> Result<VariantRun> {
    inputs.targets.validate()?;
    inputs.filter.validate()?;
    inputs.selection.validate()?;
    let sampling = SamplingParams {
        master_seed: inputs.master_seed,
        ..inputs.sampling.clone()
    };
    let model = model_for_variant(variant, inputs.generator, inputs.corpus, inputs.training)?;
    let generation = candidates_for_variant(inputs.generator, model.as_ref(), inputs.corpus, inputs.seeds, &sampling)?;
    let (survivors, filter_report) =
        apply_filters(&generation.candidates, inputs.filter, inputs.sentiment, inputs.embedder)?;
    let lexvec = lexicon_vector(inputs.lexicon, inputs.embedder)?;
    let selection = selection_for_variant(variant, inputs.selection);
    let scored = rank_and_select(&survivors, &lexvec.vector, inputs.embedder, &selection)?;
    let (dataset, negative_filter_report) = assemble_dataset(
        variant,
        model.as_ref(),
        &scored,
        inputs.negative_pool,
        &lexvec.vector,
        inputs.embedder,
        inputs.sentiment,
        inputs.filter,
        inputs.targets,
        inputs.master_seed,
        &inputs.config_hash,
    )?;
    Ok(VariantRun {
        model,
        generation,
        survivors,
        filter_report,
        scored,
        negative_filter_report,
        dataset,
    })
}

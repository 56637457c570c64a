//! Run configuration.
//!
//! One TOML file describes a run. Every section except `[inputs]` is
//! optional and falls back to the published pipeline settings. Relative paths
//! are resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pedant_core::datasets::DatasetTargets;
use pedant_core::evaluation::{FoldConfig, LabelMapping, SvmConfig, TestCorpusFormat};
use pedant_core::manifest::{config_hash, fingerprint_bytes};
use pedant_core::{CleaningConfig, FilterConfig, PipelineVariant, SamplingParams, SelectionConfig, TrainingConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_run_id")]
    pub run_id: String,
    #[serde(default)]
    pub variant: PipelineVariant,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    #[serde(default)]
    pub providers: Providers,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub targets: DatasetTargets,
    #[serde(default)]
    pub evaluation: Option<EvaluationConfig>,
}

fn default_run_id() -> String {
    "run".into()
}

fn default_output_dir() -> PathBuf {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub path: PathBuf,
    pub source_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Preliminary corpus used for fine-tuning (and as PRELIM candidates).
    pub corpus: Vec<Source>,
    /// Pool the negative class is sampled from; the corpus when empty.
    #[serde(default)]
    pub negatives: Vec<Source>,
    /// Seed file; the bundled 40 seeds when absent.
    #[serde(default)]
    pub seeds: Option<PathBuf>,
    /// Lexicon file; the bundled 28-word lexicon when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub embedder: String,
    pub embedding_dimension: usize,
    pub sentiment: String,
    pub classifier: String,
    /// Extra log-odds given to lexicon words by the lexical classifier.
    pub lexicon_boost: f64,
}

impl Default for Providers {
    fn default() -> Self {
        Self {
            embedder: pedant_core::embedding::HASHING_EMBEDDER_ID.into(),
            embedding_dimension: 64,
            sentiment: pedant_core::sentiment::LEXICON_SENTIMENT_ID.into(),
            classifier: pedant_core::evaluation::LEXICAL_CLASSIFIER_ID.into(),
            lexicon_boost: 2.0,
        }
    }
}

/// Fold settings; the seed comes from the top-level `master_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldSettings {
    pub folds: usize,
    pub n_per_class: usize,
    pub train_fraction: f64,
}

impl Default for FoldSettings {
    fn default() -> Self {
        let d = FoldConfig::default();
        Self {
            folds: d.folds,
            n_per_class: d.n_per_class,
            train_fraction: d.train_fraction,
        }
    }
}

impl FoldSettings {
    pub fn with_seed(&self, master_seed: u64) -> FoldConfig {
        FoldConfig {
            folds: self.folds,
            n_per_class: self.n_per_class,
            train_fraction: self.train_fraction,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraDataset {
    /// Name used in `schedule`.
    pub reference: String,
    /// Name shown in the model tag.
    pub name: String,
    /// JSONL of `{text, label}`; labels go through `label_mapping`.
    pub path: PathBuf,
    #[serde(default)]
    pub label_mapping: Option<LabelMapping>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCorpus {
    pub name: String,
    pub path: PathBuf,
    pub format: TestCorpusFormat,
    #[serde(default)]
    pub label_mapping: Option<LabelMapping>,
}

/// Reference under which the run's own dataset is always available.
pub const AUGMENTED_REFERENCE: &str = "augmented";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<String>,
    #[serde(default)]
    pub datasets: Vec<ExtraDataset>,
    #[serde(default)]
    pub folds: FoldSettings,
    #[serde(default)]
    pub svm: SvmConfig,
    pub test_corpora: Vec<TestCorpus>,
}

fn default_schedule() -> Vec<String> {
    vec![AUGMENTED_REFERENCE.into()]
}

impl RunConfig {
    pub fn parse(body: &str) -> Result<Self, CliError> {
        toml::from_str(body).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: pedant_core::Error| CliError::Config(e.to_string());
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) || self.run_id == ".." {
            return Err(CliError::Config("run_id: must be a plain non-empty name".into()));
        }
        if self.inputs.corpus.is_empty() {
            return Err(CliError::Config("inputs.corpus: at least one source is required".into()));
        }
        if self.providers.embedding_dimension == 0 {
            return Err(CliError::Config("providers.embedding_dimension: must be >= 1".into()));
        }
        self.training.validate().map_err(cfg)?;
        self.sampling.validate().map_err(cfg)?;
        self.filter.validate().map_err(cfg)?;
        self.selection.validate().map_err(cfg)?;
        self.targets.validate().map_err(cfg)?;
        pedant_core::corpus::Cleaner::new(self.cleaning.clone()).map_err(cfg)?;
        if let Some(ev) = &self.evaluation {
            if ev.schedule.is_empty() {
                return Err(CliError::Config("evaluation.schedule: needs at least one stage".into()));
            }
            let mut known = vec![AUGMENTED_REFERENCE.to_string(), self.variant.slug().to_string()];
            for d in &ev.datasets {
                if known.contains(&d.reference) {
                    return Err(CliError::Config(format!(
                        "evaluation.datasets.reference: `{}` is defined twice",
                        d.reference
                    )));
                }
                known.push(d.reference.clone());
            }
            for s in &ev.schedule {
                if !known.contains(s) {
                    return Err(CliError::Config(format!("evaluation.schedule: unknown dataset `{s}`")));
                }
            }
            if ev.test_corpora.is_empty() {
                return Err(CliError::Config("evaluation.test_corpora: at least one corpus is required".into()));
            }
            ev.folds.with_seed(self.master_seed).validate().map_err(cfg)?;
            ev.svm.validate().map_err(cfg)?;
        }
        Ok(())
    }

    /// Every input file referenced by the config, as written.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = self.inputs.corpus.iter().chain(&self.inputs.negatives).map(|s| s.path.as_path()).collect();
        out.extend(self.inputs.seeds.as_deref());
        out.extend(self.inputs.lexicon.as_deref());
        if let Some(ev) = &self.evaluation {
            out.extend(ev.datasets.iter().map(|d| d.path.as_path()));
            out.extend(ev.test_corpora.iter().map(|t| t.path.as_path()));
        }
        out
    }
}

/// Keys whose values come from elsewhere in the config.
const INHERITED_KEYS: &[(&str, &str)] = &[("sampling", "master_seed")];

fn reject_inherited(body: &str) -> Result<(), CliError> {
    let Ok(value) = body.parse::<toml::Table>() else {
        return Ok(());
    };
    for (section, key) in INHERITED_KEYS {
        if value.get(*section).and_then(|s| s.get(*key)).is_some() {
            return Err(CliError::Config(format!(
                "{section}.{key}: not allowed here, set the top-level master_seed instead"
            )));
        }
    }
    Ok(())
}

/// A validated config with paths resolved and its content hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub config_hash: String,
}

#[derive(Serialize)]
struct HashView<'a> {
    config: &'a RunConfig,
    inputs: BTreeMap<String, String>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        reject_inherited(&body)?;
        let config = RunConfig::parse(&body)?;
        config.validate()?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self {
            config_hash: String::new(),
            config,
            base_dir,
        };
        let hash = loaded.compute_hash()?;
        Ok(Self {
            config_hash: hash,
            ..loaded
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    /// Hash of the config (minus the output location) and of every input
    /// file's bytes.
    fn compute_hash(&self) -> Result<String, CliError> {
        let mut inputs = BTreeMap::new();
        for p in self.config.input_paths() {
            let full = self.resolve(p);
            let bytes = std::fs::read(&full)
                .map_err(|e| CliError::Config(format!("input file {}: {e}", full.display())))?;
            inputs.insert(p.display().to_string(), fingerprint_bytes(&bytes));
        }
        let mut config = self.config.clone();
        config.output_dir = PathBuf::new();
        config_hash(&HashView { config: &config, inputs }).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn run_dir(&self, out_override: Option<&Path>) -> PathBuf {
        let root = match out_override {
            Some(o) => o.to_path_buf(),
            None => self.resolve(&self.config.output_dir),
        };
        root.join(&self.config.run_id)
    }
}

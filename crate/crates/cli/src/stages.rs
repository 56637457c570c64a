//! Stage runners and the artifact layout.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pedant_core::corpus::{self, Cleaner, SkipReport};
use pedant_core::datasets::{self, DatasetManifest, MANIFEST_FILE};
use pedant_core::embedding::{Embedder, HASHING_EMBEDDER_ID, HashingEmbedder};
use pedant_core::evaluation::{
    self, LEXICAL_CLASSIFIER_ID, LabelMapping, LabelTarget, LexicalClassifier, LoadReport, MetricsReport, NamedDataset,
    SentenceClassifier, TrainingSchedule,
};
use pedant_core::generation::{self, Generator, MOCK_GENERATOR_ID, MockGenerator};
use pedant_core::io::{read_json, read_jsonl, read_lines, write_json, write_jsonl};
use pedant_core::ranking::{self, load_lexicon};
use pedant_core::registry::Registry;
use pedant_core::sentiment::{LEXICON_SENTIMENT_ID, LexiconSentiment, SentimentAnalyzer};
use pedant_core::{
    AugmentedDataset, Candidate, CleanSentence, Error, Label, LabeledSentence, ModelHandle, PersonalityLexicon,
    SamplingParams, ScoredCandidate, SeedSet,
};
use serde::{Deserialize, Serialize};

use crate::config::{AUGMENTED_REFERENCE, ExtraDataset, LoadedConfig};
use crate::{CliError, Stage, StageSelection};

const SENTENCES: &str = "sentences.jsonl";
const NEGATIVE_POOL: &str = "negative_pool.jsonl";
const SKIPPED: &str = "skipped.json";
const MODEL: &str = "model.json";
const CANDIDATES: &str = "candidates.jsonl";
const SURVIVORS: &str = "survivors.jsonl";
const FILTER_REPORT: &str = "filter_report.json";
const SCORED: &str = "scored.jsonl";
const LEXICON_REPORT: &str = "lexicon.json";
const NEGATIVE_FILTER_REPORT: &str = "negative_filter_report.json";
const METRICS: &str = "metrics.jsonl";
const LOAD_REPORTS: &str = "load_reports.json";

/// Written last into every stage directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub stage_version: u32,
    pub config_hash: String,
    pub master_seed: u64,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct DatasetStageManifest<'a> {
    stage: &'static str,
    stage_version: u32,
    #[serde(flatten)]
    dataset: &'a DatasetManifest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Ran(BTreeMap<String, usize>),
    UpToDate,
    Skipped(&'static str),
}

pub struct Pipeline {
    cfg: LoadedConfig,
    run_dir: PathBuf,
    seeds: SeedSet,
    lexicon: PersonalityLexicon,
    generator: Arc<dyn Generator>,
    embedder: Arc<dyn Embedder>,
    sentiment: Arc<dyn SentimentAnalyzer>,
    classifier: Arc<dyn SentenceClassifier>,
}

fn config_err(key: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{key}: {e}"))
}

impl Pipeline {
    /// Resolves providers and expert inputs. Anything wrong here is a
    /// config error.
    pub fn new(cfg: LoadedConfig, out_override: Option<&Path>) -> Result<Self, CliError> {
        let c = &cfg.config;
        let run_dir = cfg.run_dir(out_override);
        let seeds = match &c.inputs.seeds {
            Some(p) => generation::load_seeds(&cfg.resolve(p)).map_err(config_err("inputs.seeds"))?,
            None => SeedSet::paper_default(),
        };
        let lexicon = match &c.inputs.lexicon {
            Some(p) => load_lexicon(&cfg.resolve(p)).map_err(config_err("inputs.lexicon"))?,
            None => PersonalityLexicon::paper_default(),
        };

        let mut generators: Registry<dyn Generator> = Registry::new("generator");
        generators.register(MOCK_GENERATOR_ID, Arc::new(MockGenerator::with_state_dir(run_dir.join(Stage::Finetune.dir()))));
        let mut embedders: Registry<dyn Embedder> = Registry::new("embedder");
        embedders.register(HASHING_EMBEDDER_ID, Arc::new(HashingEmbedder::new(c.providers.embedding_dimension)));
        let mut sentiments: Registry<dyn SentimentAnalyzer> = Registry::new("sentiment analyzer");
        sentiments.register(LEXICON_SENTIMENT_ID, Arc::new(LexiconSentiment::default()));
        let mut classifiers: Registry<dyn SentenceClassifier> = Registry::new("classifier");
        classifiers.register(LEXICAL_CLASSIFIER_ID, Arc::new(LexicalClassifier::new(&lexicon, c.providers.lexicon_boost)));

        Ok(Self {
            generator: generators.get(&c.training.backend_id).map_err(config_err("training.backend_id"))?,
            embedder: embedders.get(&c.providers.embedder).map_err(config_err("providers.embedder"))?,
            sentiment: sentiments.get(&c.providers.sentiment).map_err(config_err("providers.sentiment"))?,
            classifier: classifiers.get(&c.providers.classifier).map_err(config_err("providers.classifier"))?,
            cfg,
            run_dir,
            seeds,
            lexicon,
        })
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.run_dir.join(stage.dir())
    }

    /// Runs the selected stages in order, stopping at the first failure.
    pub fn run(&self, selection: &StageSelection, force: bool) -> Result<Vec<(Stage, StageOutcome)>, CliError> {
        let has_eval = self.cfg.config.evaluation.is_some();
        if !has_eval && !selection.implicit_end && selection.stages.contains(&Stage::Evaluate) {
            return Err(CliError::Config("evaluation: section is required for the evaluate stage".into()));
        }
        let mut outcomes = Vec::new();
        for &stage in &selection.stages {
            let outcome = if stage == Stage::Evaluate && !has_eval {
                StageOutcome::Skipped("no [evaluation] section")
            } else if !force && self.is_current(stage) {
                StageOutcome::UpToDate
            } else {
                let counts = self.run_stage(stage).map_err(|source| CliError::Stage { stage, source })?;
                StageOutcome::Ran(counts)
            };
            outcomes.push((stage, outcome));
        }
        Ok(outcomes)
    }

    fn is_current(&self, stage: Stage) -> bool {
        read_json::<StageManifest>(&self.stage_dir(stage).join(MANIFEST_FILE))
            .is_ok_and(|m| m.config_hash == self.cfg.config_hash && m.stage_version == stage.version())
    }

    fn run_stage(&self, stage: Stage) -> pedant_core::Result<BTreeMap<String, usize>> {
        let dir = self.stage_dir(stage);
        // A stale manifest must not survive a failed rerun.
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.exists() {
            std::fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let counts = match stage {
            Stage::Ingest => self.ingest(&dir)?,
            Stage::Finetune => self.finetune(&dir)?,
            Stage::Generate => self.generate(&dir)?,
            Stage::Filter => self.filter(&dir)?,
            Stage::Rank => self.rank(&dir)?,
            Stage::Assemble => return self.assemble(&dir),
            Stage::Evaluate => self.evaluate(&dir)?,
        };
        self.write_manifest(stage, &counts)?;
        Ok(counts)
    }

    fn write_manifest(&self, stage: Stage, counts: &BTreeMap<String, usize>) -> pedant_core::Result<()> {
        let m = StageManifest {
            stage: stage.name().into(),
            stage_version: stage.version(),
            config_hash: self.cfg.config_hash.clone(),
            master_seed: self.cfg.config.master_seed,
            counts: counts.clone(),
        };
        write_json(&self.stage_dir(stage).join(MANIFEST_FILE), &m)
    }

    fn input(&self, stage: Stage, file: &str) -> pedant_core::Result<PathBuf> {
        let p = self.stage_dir(stage).join(file);
        if !p.exists() {
            return Err(Error::Precondition(format!(
                "missing {} (run the `{stage}` stage first)",
                p.display()
            )));
        }
        Ok(p)
    }

    fn corpus(&self) -> pedant_core::Result<Vec<CleanSentence>> {
        read_jsonl(&self.input(Stage::Ingest, SENTENCES)?)
    }

    fn model(&self) -> pedant_core::Result<Option<ModelHandle>> {
        read_json(&self.input(Stage::Finetune, MODEL)?)
    }

    fn ingest(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let c = &self.cfg.config;
        let cleaner = Cleaner::new(c.cleaning.clone())?;
        let mut skipped: BTreeMap<String, SkipReport> = BTreeMap::new();
        let mut load = |sources: &[crate::config::Source]| -> pedant_core::Result<Vec<corpus::RawDocument>> {
            let mut docs = Vec::new();
            for s in sources {
                let (d, report) = corpus::ingest(&self.cfg.resolve(&s.path), &s.source_tag)?;
                docs.extend(d);
                skipped.insert(s.path.display().to_string(), report);
            }
            Ok(docs)
        };
        let docs = load(&c.inputs.corpus)?;
        let negative_docs = load(&c.inputs.negatives)?;

        let (sentences, stats) = corpus::build_corpus(&docs, &cleaner);
        if sentences.is_empty() {
            return Err(Error::Data("corpus is empty after cleaning".into()));
        }
        write_jsonl(&dir.join(SENTENCES), &sentences)?;
        let pool_count = if negative_docs.is_empty() {
            sentences.len()
        } else {
            let (pool, _) = corpus::build_corpus(&negative_docs, &cleaner);
            write_jsonl(&dir.join(NEGATIVE_POOL), &pool)?;
            pool.len()
        };
        let skipped_total = skipped.values().map(|r| r.skipped).sum();
        write_json(&dir.join(SKIPPED), &skipped)?;
        Ok(BTreeMap::from([
            ("documents".into(), stats.document_count),
            ("sentences".into(), stats.sentence_count),
            ("tokens".into(), stats.token_count),
            ("skipped_records".into(), skipped_total),
            ("negative_pool".into(), pool_count),
        ]))
    }

    fn finetune(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let corpus = self.corpus()?;
        let c = &self.cfg.config;
        let model = datasets::model_for_variant(c.variant, self.generator.as_ref(), &corpus, &c.training)?;
        write_json(&dir.join(MODEL), &model)?;
        Ok(BTreeMap::from([
            ("corpus_sentences".into(), corpus.len()),
            ("fine_tuned".into(), usize::from(model.as_ref().is_some_and(|m| m.fine_tuned))),
        ]))
    }

    fn sampling(&self) -> SamplingParams {
        SamplingParams {
            master_seed: self.cfg.config.master_seed,
            ..self.cfg.config.sampling.clone()
        }
    }

    fn generate(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let model = self.model()?;
        let corpus = if model.is_none() { self.corpus()? } else { Vec::new() };
        let out = datasets::candidates_for_variant(self.generator.as_ref(), model.as_ref(), &corpus, &self.seeds, &self.sampling())?;
        write_jsonl(&dir.join(CANDIDATES), &out.candidates)?;
        let seeds = if model.is_some() { self.seeds.len() } else { 1 };
        Ok(BTreeMap::from([
            ("candidates".into(), out.candidates.len()),
            ("failures".into(), out.failures),
            ("seeds".into(), seeds),
        ]))
    }

    fn filter(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let candidates: Vec<Candidate> = read_jsonl(&self.input(Stage::Generate, CANDIDATES)?)?;
        let (survivors, report) = pedant_core::filtering::apply_filters(
            &candidates,
            &self.cfg.config.filter,
            self.sentiment.as_ref(),
            self.embedder.as_ref(),
        )?;
        write_jsonl(&dir.join(SURVIVORS), &survivors)?;
        write_json(&dir.join(FILTER_REPORT), &report)?;
        let mut counts = BTreeMap::from([
            ("input".into(), report.input_count),
            ("survivors".into(), report.survivor_count),
        ]);
        counts.extend(report.removed.iter().map(|(k, v)| (format!("removed_{k}"), *v)));
        Ok(counts)
    }

    fn rank(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let survivors: Vec<Candidate> = read_jsonl(&self.input(Stage::Filter, SURVIVORS)?)?;
        let lexvec = ranking::lexicon_vector(&self.lexicon, self.embedder.as_ref())?;
        let selection = datasets::selection_for_variant(self.cfg.config.variant, &self.cfg.config.selection);
        let scored = ranking::rank_and_select(&survivors, &lexvec.vector, self.embedder.as_ref(), &selection)?;
        write_jsonl(&dir.join(SCORED), &scored)?;
        write_json(
            &dir.join(LEXICON_REPORT),
            &serde_json::json!({
                "name": self.lexicon.name(),
                "words": self.lexicon.words(),
                "out_of_vocabulary": lexvec.out_of_vocabulary,
            }),
        )?;
        Ok(BTreeMap::from([
            ("survivors".into(), survivors.len()),
            ("selected".into(), scored.len()),
            ("lexicon_out_of_vocabulary".into(), lexvec.out_of_vocabulary.len()),
        ]))
    }

    fn negative_pool(&self) -> pedant_core::Result<Vec<CleanSentence>> {
        let separate = self.stage_dir(Stage::Ingest).join(NEGATIVE_POOL);
        if separate.exists() { read_jsonl(&separate) } else { self.corpus() }
    }

    fn assemble(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let c = &self.cfg.config;
        let scored: Vec<ScoredCandidate> = read_jsonl(&self.input(Stage::Rank, SCORED)?)?;
        let model = self.model()?;
        let pool = self.negative_pool()?;
        let lexvec = ranking::lexicon_vector(&self.lexicon, self.embedder.as_ref())?;
        let (dataset, negative_report) = datasets::assemble_dataset(
            c.variant,
            model.as_ref(),
            &scored,
            &pool,
            &lexvec.vector,
            self.embedder.as_ref(),
            self.sentiment.as_ref(),
            &c.filter,
            &c.targets,
            c.master_seed,
            &self.cfg.config_hash,
        )?;
        dataset.write(dir)?;
        write_json(&dir.join(NEGATIVE_FILTER_REPORT), &negative_report)?;
        let m = &dataset.manifest;
        write_json(
            &dir.join(MANIFEST_FILE),
            &DatasetStageManifest {
                stage: Stage::Assemble.name(),
                stage_version: Stage::Assemble.version(),
                dataset: m,
            },
        )?;
        Ok(BTreeMap::from([
            ("positive".into(), m.counts.positive),
            ("negative".into(), m.counts.negative),
            ("positive_shortfall".into(), m.shortfalls.positive),
            ("negative_shortfall".into(), m.shortfalls.negative),
        ]))
    }

    fn extra_dataset(&self, d: &ExtraDataset) -> pedant_core::Result<NamedDataset> {
        let path = self.cfg.resolve(&d.path);
        let mapping = d.label_mapping.clone().unwrap_or_default();
        let mut sentences = Vec::new();
        for (i, line) in read_lines(&path)?.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let (Some(text), Some(raw)) = (v.get("text").and_then(|t| t.as_str()), v.get("label")) else {
                return Err(Error::Parse {
                    path: path.clone(),
                    line: i + 1,
                    message: "expected `text` and `label`".into(),
                });
            };
            let label = match mapping.resolve(raw) {
                Some(LabelTarget::Positive) => Label::Positive,
                Some(LabelTarget::Negative) => Label::Negative,
                Some(LabelTarget::Drop) | None => continue,
            };
            sentences.push(LabeledSentence {
                text: text.to_string(),
                label,
                provenance: format!("{}:{i}", d.reference),
            });
        }
        Ok(NamedDataset {
            name: d.name.clone(),
            sentences,
        })
    }

    fn evaluate(&self, dir: &Path) -> pedant_core::Result<BTreeMap<String, usize>> {
        let c = &self.cfg.config;
        let Some(ev) = &c.evaluation else {
            return Err(Error::Config("evaluation: section missing".into()));
        };
        self.input(Stage::Assemble, datasets::DATASET_FILE)?;
        let own = AugmentedDataset::read(&self.stage_dir(Stage::Assemble))?;
        let own = NamedDataset {
            name: own.name.clone(),
            sentences: own.sentences().cloned().collect(),
        };
        let mut pool = BTreeMap::from([
            (AUGMENTED_REFERENCE.to_string(), own.clone()),
            (c.variant.slug().to_string(), own),
        ]);
        let wanted: HashSet<&String> = ev.schedule.iter().collect();
        for d in ev.datasets.iter().filter(|d| wanted.contains(&d.reference)) {
            pool.insert(d.reference.clone(), self.extra_dataset(d)?);
        }
        let schedule = TrainingSchedule::new(ev.schedule.clone())?;
        let scorer = evaluation::train_scorer(self.classifier.as_ref(), &schedule, &pool)?;

        let fold = ev.folds.with_seed(c.master_seed);
        let mut reports: Vec<MetricsReport> = Vec::new();
        let mut loads: BTreeMap<String, LoadReport> = BTreeMap::new();
        for t in &ev.test_corpora {
            let mapping = t.label_mapping.clone().unwrap_or_else(LabelMapping::default);
            let (users, load) = evaluation::load_test_corpus(&self.cfg.resolve(&t.path), t.format, &mapping)?;
            loads.insert(t.name.clone(), load);
            reports.push(evaluation::evaluate_corpus(&scorer, &t.name, &users, &fold, &ev.svm)?);
        }
        write_jsonl(&dir.join(METRICS), &reports)?;
        write_json(&dir.join(LOAD_REPORTS), &loads)?;
        let mut counts = BTreeMap::from([("test_corpora".into(), reports.len())]);
        counts.extend(loads.iter().map(|(k, r)| (format!("users_{k}"), r.users)));
        Ok(counts)
    }
}

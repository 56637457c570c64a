//! Downstream evaluation.
//!
//! A sentence scorer is trained on one or more labeled datasets in sequence.
//! Each test user gets a PsychoScore, the mean scorer output over their
//! sentences. Classes are balanced by down-sampling, and an RBF SVM on the
//! one-dimensional PsychoScore is evaluated over repeated stratified
//! train/test folds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::segment_sentences;
use crate::datasets::{Label, LabeledSentence};
use crate::error::{Error, Result};
use crate::io::read_lines;
use crate::ranking::PersonalityLexicon;
use crate::rng;
use crate::svm::{Kernel, SolverOptions, SvmModel};
use crate::text::{self, StopWords};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    /// Dataset references, trained on in order.
    pub stages: Vec<String>,
}

impl TrainingSchedule {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(stages: I) -> Result<Self> {
        let stages: Vec<String> = stages.into_iter().map(Into::into).collect();
        if stages.is_empty() {
            return Err(Error::Config("evaluation.schedule: needs at least one stage".into()));
        }
        Ok(Self { stages })
    }
}

/// A labeled training set addressable from a schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedDataset {
    /// Display name used in the model tag, e.g. "Dexter" or "OffenseEval".
    pub name: String,
    pub sentences: Vec<LabeledSentence>,
}

pub trait SentenceScorer: Send + Sync {
    /// Probability in [0, 1] that `sentence` belongs to the positive class.
    fn score(&self, sentence: &str) -> f64;
}

pub trait SentenceClassifier: Send + Sync {
    fn backend_id(&self) -> &str;

    /// Trains on `stages` in order, each stage continuing from the previous.
    fn train(&self, stages: &[&NamedDataset]) -> Result<Box<dyn SentenceScorer>>;
}

pub struct TrainedScorer {
    pub name: String,
    inner: Box<dyn SentenceScorer>,
}

impl TrainedScorer {
    pub fn new(name: impl Into<String>, inner: Box<dyn SentenceScorer>) -> Self {
        Self {
            name: name.into(),
            inner,
        }
    }

    pub fn score(&self, sentence: &str) -> f64 {
        self.inner.score(sentence)
    }
}

impl std::fmt::Debug for TrainedScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainedScorer").field("name", &self.name).finish()
    }
}

/// `X@backend` for a single stage, `X@backend+` when earlier stages preceded
/// the final dataset `X`.
pub fn model_tag(stage_names: &[&str], backend: &str) -> String {
    let last = stage_names.last().copied().unwrap_or("");
    let plus = if stage_names.len() > 1 { "+" } else { "" };
    format!("{last}@{backend}{plus}")
}

pub fn train_scorer(
    backend: &dyn SentenceClassifier,
    schedule: &TrainingSchedule,
    datasets: &BTreeMap<String, NamedDataset>,
) -> Result<TrainedScorer> {
    if schedule.stages.is_empty() {
        return Err(Error::Config("evaluation.schedule: needs at least one stage".into()));
    }
    let stages = schedule
        .stages
        .iter()
        .map(|r| {
            datasets
                .get(r)
                .ok_or_else(|| Error::Config(format!("evaluation.schedule: unknown dataset `{r}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = stages.iter().map(|d| d.name.as_str()).collect();
    let tag = model_tag(&names, backend.backend_id());
    Ok(TrainedScorer::new(tag, backend.train(&stages)?))
}

pub const LEXICAL_CLASSIFIER_ID: &str = "lexical";

/// Deterministic bag-of-words classifier.
///
/// Word weights are smoothed log-odds of presence in positive versus negative
/// sentences, accumulated over all stages; lexicon words get an extra
/// `lexicon_boost`. The score is the logistic of the class prior plus the
/// weights of the distinct non-stop words in the sentence.
#[derive(Debug, Clone)]
pub struct LexicalClassifier {
    lexicon: HashSet<String>,
    lexicon_boost: f64,
}

impl LexicalClassifier {
    pub fn new(lexicon: &PersonalityLexicon, lexicon_boost: f64) -> Self {
        Self {
            lexicon: lexicon.words().iter().cloned().collect(),
            lexicon_boost,
        }
    }
}

impl Default for LexicalClassifier {
    fn default() -> Self {
        Self::new(&PersonalityLexicon::paper_default(), 2.0)
    }
}

struct LexicalScorer {
    prior: f64,
    weights: HashMap<String, f64>,
}

fn content_words(sentence: &str) -> impl Iterator<Item = String> {
    let stop = StopWords::english();
    let mut seen = HashSet::new();
    text::words(sentence)
        .into_iter()
        .filter(move |w| !stop.contains(w) && seen.insert(w.clone()))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl SentenceScorer for LexicalScorer {
    fn score(&self, sentence: &str) -> f64 {
        let logit = self.prior + content_words(sentence).filter_map(|w| self.weights.get(&w)).sum::<f64>();
        sigmoid(logit)
    }
}

impl SentenceClassifier for LexicalClassifier {
    fn backend_id(&self) -> &str {
        LEXICAL_CLASSIFIER_ID
    }

    fn train(&self, stages: &[&NamedDataset]) -> Result<Box<dyn SentenceScorer>> {
        let (mut n_pos, mut n_neg) = (0usize, 0usize);
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        for stage in stages {
            for s in &stage.sentences {
                let positive = s.label == Label::Positive;
                if positive { n_pos += 1 } else { n_neg += 1 }
                for w in content_words(&s.text) {
                    let e = counts.entry(w).or_default();
                    if positive { e.0 += 1 } else { e.1 += 1 }
                }
            }
        }
        if n_pos + n_neg == 0 {
            return Err(Error::Data("classifier training stages contain no sentences".into()));
        }
        let mut weights: HashMap<String, f64> = counts
            .into_iter()
            .map(|(w, (p, q))| {
                let lo = ((p as f64 + 1.0) / (n_pos as f64 + 2.0)).ln() - ((q as f64 + 1.0) / (n_neg as f64 + 2.0)).ln();
                (w, lo)
            })
            .collect();
        for w in &self.lexicon {
            *weights.entry(w.clone()).or_default() += self.lexicon_boost;
        }
        Ok(Box::new(LexicalScorer {
            prior: ((n_pos as f64 + 1.0) / (n_neg as f64 + 1.0)).ln(),
            weights,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub sentences: Vec<String>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsychoScore {
    pub user_id: String,
    pub score: f64,
}

/// Mean scorer output over the user's sentences.
pub fn psycho_score(scorer: &TrainedScorer, user: &UserRecord) -> Result<PsychoScore> {
    if user.sentences.is_empty() {
        return Err(Error::Precondition(format!("user `{}` has no sentences", user.user_id)));
    }
    let total: f64 = user.sentences.iter().map(|s| scorer.score(s)).sum();
    Ok(PsychoScore {
        user_id: user.user_id.clone(),
        score: (total / user.sentences.len() as f64).clamp(0.0, 1.0),
    })
}

/// Down-samples the majority class (seeded, without replacement) to the
/// minority count. Input order is preserved among the kept users.
pub fn balance_downsample(users: &[UserRecord], master_seed: u64) -> Result<Vec<UserRecord>> {
    let pos: Vec<usize> = (0..users.len()).filter(|&i| users[i].label == Label::Positive).collect();
    let neg: Vec<usize> = (0..users.len()).filter(|&i| users[i].label == Label::Negative).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Data(format!(
            "cannot balance: {} positive and {} negative users",
            pos.len(),
            neg.len()
        )));
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = rng::stream(master_seed, "balance");
    let picked = rand::seq::index::sample(&mut rng, majority.len(), minority.len());
    let mut keep: Vec<usize> = minority.into_iter().chain(picked.into_iter().map(|k| majority[k])).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| users[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldConfig {
    pub folds: usize,
    pub n_per_class: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
}

impl Default for FoldConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            n_per_class: 100,
            train_fraction: 0.8,
            master_seed: 0,
        }
    }
}

impl FoldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 1 {
            return Err(Error::Config("evaluation.folds.folds: must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("evaluation.folds.train_fraction: must be in (0, 1)".into()));
        }
        if self.n_per_class < 5 {
            return Err(Error::Config("evaluation.folds.n_per_class: must be >= 5".into()));
        }
        let train = self.train_per_class();
        if train == 0 || train == self.n_per_class {
            return Err(Error::Config("evaluation.folds: split leaves an empty train or test side".into()));
        }
        Ok(())
    }

    pub fn train_per_class(&self) -> usize {
        (self.n_per_class as f64 * self.train_fraction).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    /// `1 / (n_features · Var(X_train))`.
    Named(GammaRule),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaRule {
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelKind,
    pub gamma: Gamma,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: KernelKind::Rbf,
            gamma: Gamma::Named(GammaRule::Scale),
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Config("evaluation.svm.c: must be > 0".into()));
        }
        if let Gamma::Value(g) = self.gamma
            && !(g > 0.0)
        {
            return Err(Error::Config("evaluation.svm.gamma: must be > 0".into()));
        }
        Ok(())
    }

    fn kernel_for(&self, x: &[Vec<f64>]) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => {
                let gamma = match self.gamma {
                    Gamma::Value(g) => g,
                    Gamma::Named(GammaRule::Scale) => {
                        let all: Vec<f64> = x.iter().flatten().copied().collect();
                        let n_features = x.first().map_or(1, Vec::len).max(1);
                        let var = variance(&all);
                        if var > 0.0 { 1.0 / (n_features as f64 * var) } else { 1.0 }
                    }
                };
                Kernel::Rbf { gamma }
            }
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population variance.
fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub macro_f1: f64,
    pub macro_f1_std: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
}

/// Positive-class precision, recall and F1 plus macro-F1 over both classes.
/// Any 0/0 is taken as 0.
pub fn metrics_from_confusion(tp: usize, fp: usize, fn_: usize, tn: usize) -> EvalMetrics {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = harmonic(precision, recall);
    let neg_f1 = harmonic(ratio(tn, tn + fn_), ratio(tn, tn + fp));
    EvalMetrics {
        precision,
        recall,
        f1,
        macro_f1: (f1 + neg_f1) / 2.0,
        macro_f1_std: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Fold means; `macro_f1_std` is the population std of fold macro-F1.
    pub metrics: EvalMetrics,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub confusion: Confusion,
    pub metrics: EvalMetrics,
}

/// Repeated balanced SVM evaluation on scalar scores.
///
/// Each fold draws `n_per_class` users per class without replacement,
/// splits each class `train_fraction`/rest, standardises the score with the
/// train split statistics, fits the SVM and scores the held-out users. Folds
/// are drawn independently from one seeded stream.
pub fn cross_validate(scores: &[(f64, Label)], fold: &FoldConfig, svm: &SvmConfig) -> Result<CrossValidation> {
    fold.validate()?;
    svm.validate()?;
    let pos: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Positive).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Negative).map(|s| s.0).collect();
    for (name, have) in [("positive", pos.len()), ("negative", neg.len())] {
        if have < fold.n_per_class {
            return Err(Error::Data(format!(
                "cross-validation needs {} {name} users, have {have} (short by {})",
                fold.n_per_class,
                fold.n_per_class - have
            )));
        }
    }

    let mut rng = rng::stream(fold.master_seed, "folds");
    let n_train = fold.train_per_class();
    let mut results = Vec::with_capacity(fold.folds);
    for _ in 0..fold.folds {
        let mut draw = |class: &[f64]| -> Vec<f64> {
            let mut idx = rand::seq::index::sample(&mut rng, class.len(), fold.n_per_class).into_vec();
            idx.shuffle(&mut rng);
            idx.into_iter().map(|i| class[i]).collect()
        };
        let p = draw(&pos);
        let q = draw(&neg);
        let train: Vec<(f64, bool)> = p[..n_train].iter().map(|&s| (s, true)).chain(q[..n_train].iter().map(|&s| (s, false))).collect();
        let test: Vec<(f64, bool)> = p[n_train..].iter().map(|&s| (s, true)).chain(q[n_train..].iter().map(|&s| (s, false))).collect();

        let raw: Vec<f64> = train.iter().map(|t| t.0).collect();
        let mu = mean(&raw);
        let sd = variance(&raw).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        let z = |s: f64| vec![(s - mu) / sd];
        let x: Vec<Vec<f64>> = train.iter().map(|t| z(t.0)).collect();
        let y: Vec<bool> = train.iter().map(|t| t.1).collect();
        let model = SvmModel::fit(&x, &y, svm.c, svm.kernel_for(&x), SolverOptions::default())?;

        let mut cm = Confusion::default();
        for &(s, truth) in &test {
            match (model.predict(&z(s)), truth) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, true) => cm.fn_ += 1,
                (false, false) => cm.tn += 1,
            }
        }
        results.push(FoldResult {
            confusion: cm,
            metrics: metrics_from_confusion(cm.tp, cm.fp, cm.fn_, cm.tn),
        });
    }

    let avg = |f: fn(&EvalMetrics) -> f64| mean(&results.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let macros: Vec<f64> = results.iter().map(|r| r.metrics.macro_f1).collect();
    Ok(CrossValidation {
        metrics: EvalMetrics {
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f1: avg(|m| m.f1),
            macro_f1: mean(&macros),
            macro_f1_std: variance(&macros).sqrt(),
        },
        folds: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestCorpusFormat {
    /// `{user_id, label, sentences: [...]}` per line.
    UserGroupedJsonl,
    /// `{message_id, label, text}` per line; each message is one user.
    MessageLevelJsonl,
}

impl std::str::FromStr for TestCorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user_grouped_jsonl" => Ok(TestCorpusFormat::UserGroupedJsonl),
            "message_level_jsonl" => Ok(TestCorpusFormat::MessageLevelJsonl),
            other => Err(Error::Config(format!("unknown test corpus format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelTarget {
    Positive,
    Negative,
    Drop,
}

/// Raw label (JSON value rendered as text) → class. Numbers and booleans
/// are matched by their JSON text, e.g. `0` or `true`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMapping(pub BTreeMap<String, LabelTarget>);

impl Default for LabelMapping {
    fn default() -> Self {
        use LabelTarget::*;
        Self(
            [
                ("POSITIVE", Positive),
                ("positive", Positive),
                ("1", Positive),
                ("true", Positive),
                ("NEGATIVE", Negative),
                ("negative", Negative),
                ("0", Negative),
                ("false", Negative),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        )
    }
}

impl LabelMapping {
    pub fn resolve(&self, raw: &serde_json::Value) -> Option<LabelTarget> {
        let key = match raw {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        self.0.get(&key).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub records: usize,
    pub users: usize,
    pub dropped_by_mapping: usize,
    pub unmapped_label: usize,
    pub no_sentences: usize,
    pub malformed: usize,
}

/// Loads a labeled test corpus. Malformed records, unmapped labels and
/// users without sentences are skipped and counted.
pub fn load_test_corpus(path: &Path, format: TestCorpusFormat, mapping: &LabelMapping) -> Result<(Vec<UserRecord>, LoadReport)> {
    let mut users = Vec::new();
    let mut report = LoadReport::default();
    for (line_no, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.records += 1;
        let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) else {
            report.malformed += 1;
            continue;
        };
        let (id_key, id_fallback) = match format {
            TestCorpusFormat::UserGroupedJsonl => ("user_id", format!("user:{line_no}")),
            TestCorpusFormat::MessageLevelJsonl => ("message_id", format!("message:{line_no}")),
        };
        let user_id = match v.get(id_key) {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Null) | None => id_fallback,
            Some(other) => other.to_string(),
        };
        let Some(raw_label) = v.get("label") else {
            report.malformed += 1;
            continue;
        };
        let label = match mapping.resolve(raw_label) {
            Some(LabelTarget::Positive) => Label::Positive,
            Some(LabelTarget::Negative) => Label::Negative,
            Some(LabelTarget::Drop) => {
                report.dropped_by_mapping += 1;
                continue;
            }
            None => {
                report.unmapped_label += 1;
                continue;
            }
        };
        let sentences: Vec<String> = match format {
            TestCorpusFormat::UserGroupedJsonl => match v.get("sentences").and_then(|s| s.as_array()) {
                Some(arr) => arr
                    .iter()
                    .filter_map(|s| s.as_str())
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
                None => {
                    report.malformed += 1;
                    continue;
                }
            },
            TestCorpusFormat::MessageLevelJsonl => match v.get("text").and_then(|s| s.as_str()) {
                Some(t) => segment_sentences(t),
                None => {
                    report.malformed += 1;
                    continue;
                }
            },
        };
        if sentences.is_empty() {
            report.no_sentences += 1;
            continue;
        }
        users.push(UserRecord {
            user_id,
            sentences,
            label,
        });
    }
    report.users = users.len();
    Ok((users, report))
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub dataset: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub macro_f1: f64,
    pub macro_f1_std: f64,
    pub fold_config: FoldConfig,
    pub seed: u64,
}

/// Balance, score and cross-validate one test corpus.
pub fn evaluate_corpus(
    scorer: &TrainedScorer,
    dataset: &str,
    users: &[UserRecord],
    fold: &FoldConfig,
    svm: &SvmConfig,
) -> Result<MetricsReport> {
    let balanced = balance_downsample(users, fold.master_seed)?;
    let scores = balanced
        .par_iter()
        .map(|u| psycho_score(scorer, u).map(|p| (p.score, u.label)))
        .collect::<Result<Vec<_>>>()?;
    let cv = cross_validate(&scores, fold, svm)?;
    Ok(MetricsReport {
        model_name: scorer.name.clone(),
        dataset: dataset.to_string(),
        precision: cv.metrics.precision,
        recall: cv.metrics.recall,
        f1: cv.metrics.f1,
        macro_f1: cv.metrics.macro_f1,
        macro_f1_std: cv.metrics.macro_f1_std,
        fold_config: fold.clone(),
        seed: fold.master_seed,
    })
}

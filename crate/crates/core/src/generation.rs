//! Seed sentences, generator providers and seeded completion sampling.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CleanSentence;
use crate::error::{Error, Result};
use crate::manifest::fingerprint_lines;
use crate::rng::completion_seed;
use crate::text::{self, StopWords};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeliefCategory {
    #[serde(rename = "SELF")]
    SelfBeliefs,
    #[serde(rename = "OTHERS")]
    Others,
}

impl BeliefCategory {
    pub const SELF_HEADER: &'static str = "beliefs_about_self";
    pub const OTHERS_HEADER: &'static str = "beliefs_about_others";

    fn header(self) -> &'static str {
        match self {
            BeliefCategory::SelfBeliefs => Self::SELF_HEADER,
            BeliefCategory::Others => Self::OTHERS_HEADER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSentence {
    pub seed_id: usize,
    pub text: String,
    pub belief_category: BeliefCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    seeds: Vec<SeedSentence>,
}

const DEFAULT_SEEDS: &str = include_str!("../data/seeds.txt");

impl SeedSet {
    /// Validates contiguous ids, non-empty texts and presence of both categories.
    pub fn new(seeds: Vec<SeedSentence>) -> Result<Self> {
        for (i, s) in seeds.iter().enumerate() {
            if s.seed_id != i {
                return Err(Error::Config(format!("seed ids must be contiguous from 0; found {} at position {i}", s.seed_id)));
            }
            if s.text.trim().is_empty() {
                return Err(Error::Config(format!("seed {i} is empty")));
            }
        }
        for cat in [BeliefCategory::SelfBeliefs, BeliefCategory::Others] {
            if !seeds.iter().any(|s| s.belief_category == cat) {
                return Err(Error::Config(format!("seed set has no `{}` sentences", cat.header())));
            }
        }
        Ok(Self { seeds })
    }

    /// The bundled 40 expert seeds: 20 beliefs about self, 20 about others.
    pub fn paper_default() -> Self {
        parse_seeds(DEFAULT_SEEDS).expect("bundled seed file is valid")
    }

    #[cfg(test)]
    pub(crate) fn unchecked(seeds: Vec<SeedSentence>) -> Self {
        Self { seeds }
    }

    pub fn seeds(&self) -> &[SeedSentence] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn count(&self, category: BeliefCategory) -> usize {
        self.seeds.iter().filter(|s| s.belief_category == category).count()
    }

    /// Renders the set in the seed-file format accepted by [`parse_seeds`].
    pub fn to_file_format(&self) -> String {
        let mut out = String::new();
        for cat in [BeliefCategory::SelfBeliefs, BeliefCategory::Others] {
            out.push_str(&format!("# {}\n", cat.header()));
            for s in self.seeds.iter().filter(|s| s.belief_category == cat) {
                out.push_str(&s.text);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the seed-file format: `# beliefs_about_self` and
/// `# beliefs_about_others` headers, one sentence per line, blank lines
/// ignored. SELF seeds are numbered first regardless of section order.
pub fn parse_seeds(body: &str) -> Result<SeedSet> {
    let mut sections: BTreeMap<BeliefCategory, Vec<String>> = BTreeMap::new();
    let mut current = None;
    for (i, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let cat = match header.trim() {
                BeliefCategory::SELF_HEADER => BeliefCategory::SelfBeliefs,
                BeliefCategory::OTHERS_HEADER => BeliefCategory::Others,
                other => return Err(Error::Config(format!("seed file line {}: unknown section `{other}`", i + 1))),
            };
            sections.entry(cat).or_default();
            current = Some(cat);
            continue;
        }
        let Some(cat) = current else {
            return Err(Error::Config(format!("seed file line {}: sentence before any section header", i + 1)));
        };
        if !line.chars().any(char::is_alphanumeric) {
            return Err(Error::Config(format!("seed file line {}: empty seed sentence", i + 1)));
        }
        sections.entry(cat).or_default().push(line.to_string());
    }
    for cat in [BeliefCategory::SelfBeliefs, BeliefCategory::Others] {
        match sections.get(&cat) {
            None => return Err(Error::Config(format!("seed file is missing the `# {}` section", cat.header()))),
            Some(v) if v.is_empty() => {
                return Err(Error::Config(format!("seed file section `# {}` is empty", cat.header())));
            }
            Some(_) => {}
        }
    }
    let seeds = sections
        .into_iter()
        .flat_map(|(cat, texts)| texts.into_iter().map(move |t| (cat, t)))
        .enumerate()
        .map(|(seed_id, (belief_category, text))| SeedSentence {
            seed_id,
            text,
            belief_category,
        })
        .collect();
    SeedSet::new(seeds)
}

pub fn load_seeds(path: &Path) -> Result<SeedSet> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_seeds(&body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub backend_id: String,
    pub model_name: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub optimizer_name: String,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            backend_id: MOCK_GENERATOR_ID.to_string(),
            model_name: "1558M".to_string(),
            learning_rate: 0.0001,
            batch_size: 4,
            steps: 10_000,
            optimizer_name: "adafactor".to_string(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("training.learning_rate: must be > 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("training.batch_size: must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    /// Generated tokens per completion, prompt excluded.
    pub max_length: usize,
    pub temperature: f64,
    /// 0 disables top-k truncation.
    pub top_k: usize,
    pub top_p: f64,
    pub completions_per_seed: usize,
    pub master_seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            max_length: 50,
            temperature: 0.7,
            top_k: 50,
            top_p: 0.90,
            completions_per_seed: 200,
            master_seed: 0,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config("sampling.top_p: must be in (0, 1]".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("sampling.temperature: must be > 0".into()));
        }
        if self.completions_per_seed < 1 {
            return Err(Error::Config("sampling.completions_per_seed: must be >= 1".into()));
        }
        if self.max_length < 1 {
            return Err(Error::Config("sampling.max_length: must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHandle {
    pub handle_id: String,
    pub backend_id: String,
    pub fine_tuned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub seed_id: usize,
    pub completion_index: usize,
    pub text: String,
}

/// A text generator backend.
pub trait Generator: Send + Sync {
    fn backend_id(&self) -> &str;

    /// Adapts the pre-trained model to `corpus` with a next-token objective.
    fn fine_tune(&self, corpus: &[CleanSentence], config: &TrainingConfig) -> Result<ModelHandle>;

    /// Handle of the pre-trained model without fine-tuning.
    fn base_model(&self) -> ModelHandle;

    /// One completion of `prompt`. The returned text may or may not repeat
    /// the prompt; the caller strips it.
    fn complete(&self, model: &ModelHandle, prompt: &str, params: &SamplingParams, rng_seed: u64) -> Result<String>;

    /// `Some(1)` forces sequential completion calls.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }
}

pub fn fine_tune(generator: &dyn Generator, corpus: &[CleanSentence], config: &TrainingConfig) -> Result<ModelHandle> {
    if corpus.is_empty() {
        return Err(Error::Precondition("fine-tuning corpus is empty".into()));
    }
    config.validate()?;
    let handle = generator.fine_tune(corpus, config)?;
    if !handle.fine_tuned {
        return Err(Error::backend(generator.backend_id(), "fine_tune returned a non-fine-tuned handle"));
    }
    Ok(handle)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationOutput {
    pub candidates: Vec<Candidate>,
    /// Completions that failed twice and were recorded with empty text.
    pub failures: usize,
}

/// Removes a leading copy of `prompt`, then surrounding whitespace and a
/// leading `|` prompt/continuation delimiter.
pub fn strip_prompt(prompt: &str, output: &str) -> String {
    let prompt = prompt.trim();
    let out = output.trim_start();
    let rest = out.strip_prefix(prompt).unwrap_or(out);
    rest.trim_start_matches(|c: char| c.is_whitespace() || c == '|')
        .trim_end()
        .to_string()
}

/// Prompts `model` with every seed `completions_per_seed` times.
///
/// Output has exactly `|seeds| * c` rows in `(seed_id, completion_index)`
/// order. Each completion draws from an RNG seeded by its coordinates, so the
/// result does not depend on the parallel schedule.
pub fn generate_completions(
    generator: &dyn Generator,
    model: &ModelHandle,
    seeds: &SeedSet,
    params: &SamplingParams,
) -> Result<GenerationOutput> {
    if seeds.is_empty() {
        return Err(Error::Precondition("seed set is empty".into()));
    }
    params.validate()?;
    let c = params.completions_per_seed;
    let jobs: Vec<(usize, usize)> = seeds
        .seeds()
        .iter()
        .flat_map(|s| (0..c).map(move |i| (s.seed_id, i)))
        .collect();

    let run = |&(seed_id, completion_index): &(usize, usize)| -> (Candidate, bool) {
        let prompt = &seeds.seeds()[seed_id].text;
        let rng_seed = completion_seed(params.master_seed, seed_id, completion_index);
        let attempt = || generator.complete(model, prompt, params, rng_seed);
        let (text, failed) = match attempt().or_else(|_| attempt()) {
            Ok(raw) => (strip_prompt(prompt, &raw), false),
            Err(_) => (String::new(), true),
        };
        (
            Candidate {
                seed_id,
                completion_index,
                text,
            },
            failed,
        )
    };

    let results: Vec<(Candidate, bool)> = if generator.max_concurrency() == Some(1) {
        jobs.iter().map(run).collect()
    } else {
        jobs.par_iter().map(run).collect()
    };
    let failures = results.iter().filter(|(_, f)| *f).count();
    Ok(GenerationOutput {
        candidates: results.into_iter().map(|(c, _)| c).collect(),
        failures,
    })
}

/// Treats corpus sentences as completions of one synthetic seed (id 0).
pub fn candidates_from_corpus(sentences: &[CleanSentence]) -> Vec<Candidate> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| Candidate {
            seed_id: 0,
            completion_index: i,
            text: s.text.clone(),
        })
        .collect()
}

pub const MOCK_GENERATOR_ID: &str = "mock";

/// Word-frequency table sampled with temperature, top-k and nucleus rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramModel {
    /// Sorted by descending count, then word.
    pub vocab: Vec<(String, u64)>,
}

impl UnigramModel {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for t in texts {
            for w in text::words(t) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut vocab: Vec<_> = counts.into_iter().collect();
        vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { vocab }
    }

    /// Adds the prompt's content words, each as frequent as the current top
    /// word, so completions stay on the prompt's topic.
    pub fn primed(&self, prompt: &str) -> Self {
        let top = self.vocab.first().map_or(1, |(_, c)| *c);
        let stop = StopWords::english();
        let mut counts: HashMap<String, u64> = self.vocab.iter().cloned().collect();
        for w in text::words(prompt) {
            if !stop.contains(&w) {
                let c = counts.entry(w).or_default();
                *c = (*c).max(top);
            }
        }
        let mut vocab: Vec<_> = counts.into_iter().collect();
        vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { vocab }
    }

    /// Token distribution after temperature, top-k and top-p truncation.
    pub fn distribution(&self, params: &SamplingParams) -> Vec<(usize, f64)> {
        let k = if params.top_k == 0 {
            self.vocab.len()
        } else {
            params.top_k.min(self.vocab.len())
        };
        let logits: Vec<f64> = self.vocab[..k]
            .iter()
            .map(|(_, c)| (*c as f64).ln() / params.temperature)
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut kept = Vec::new();
        let mut cumulative = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let p = w / total;
            kept.push((i, p));
            cumulative += p;
            if cumulative >= params.top_p {
                break;
            }
        }
        let mass: f64 = kept.iter().map(|(_, p)| p).sum();
        kept.into_iter().map(|(i, p)| (i, p / mass)).collect()
    }

    fn sample(&self, params: &SamplingParams, rng_seed: u64) -> String {
        if self.vocab.is_empty() {
            return String::new();
        }
        let dist = self.distribution(params);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let len = rng.random_range(1..=params.max_length.min(12));
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = dist.last().map(|(i, _)| *i).unwrap_or(0);
            for &(i, p) in &dist {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            words.push(self.vocab[pick].0.as_str());
        }
        format!("{}.", words.join(" "))
    }
}

const BASE_VOCAB: &[(&str, u64)] = &[
    ("the", 60), ("and", 40), ("to", 38), ("people", 20), ("day", 14), ("good", 12),
    ("like", 12), ("time", 11), ("work", 10), ("think", 10), ("friends", 9), ("family", 9),
    ("really", 9), ("happy", 8), ("home", 8), ("know", 8), ("world", 7), ("life", 7),
    ("help", 7), ("love", 6), ("music", 6), ("game", 6), ("weekend", 5), ("coffee", 5),
    ("school", 5), ("bad", 5), ("weather", 4), ("city", 4), ("food", 4), ("book", 4),
    ("morning", 4), ("tired", 3), ("hard", 3), ("problem", 3), ("angry", 2), ("weak", 2),
    ("selfish", 2), ("strange", 2), ("money", 2), ("news", 2),
];

/// Deterministic stand-in generator.
///
/// The base model samples from a small everyday vocabulary; fine-tuning
/// replaces it with the corpus word frequencies. Either is primed with the
/// prompt's content words before sampling. Completions are
/// `"<prompt> <words>."` with 1 to `min(max_length, 12)` sampled words.
/// Fine-tuned models are cached in memory and, when a state directory is set,
/// persisted as `<state_dir>/<handle_id>.json` so other processes can resolve
/// the handle.
#[derive(Debug, Default)]
pub struct MockGenerator {
    state_dir: Option<PathBuf>,
    models: RwLock<HashMap<String, Arc<UnigramModel>>>,
}

impl MockGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_state_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            state_dir: Some(dir.into()),
            models: RwLock::default(),
        }
    }

    fn base() -> UnigramModel {
        UnigramModel {
            vocab: BASE_VOCAB.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
        }
    }

    fn resolve(&self, model: &ModelHandle) -> Result<Arc<UnigramModel>> {
        if !model.fine_tuned {
            return Ok(Arc::new(Self::base()));
        }
        if let Some(m) = self.models.read().unwrap().get(&model.handle_id) {
            return Ok(m.clone());
        }
        let Some(dir) = &self.state_dir else {
            return Err(Error::backend(MOCK_GENERATOR_ID, format!("unknown model handle `{}`", model.handle_id)));
        };
        let path = dir.join(format!("{}.json", model.handle_id));
        let loaded: Arc<UnigramModel> = Arc::new(crate::io::read_json(&path)?);
        self.models.write().unwrap().insert(model.handle_id.clone(), loaded.clone());
        Ok(loaded)
    }
}

impl Generator for MockGenerator {
    fn backend_id(&self) -> &str {
        MOCK_GENERATOR_ID
    }

    fn fine_tune(&self, corpus: &[CleanSentence], config: &TrainingConfig) -> Result<ModelHandle> {
        let fingerprint = fingerprint_lines(corpus.iter().map(|s| s.text.as_str()));
        let handle_id = format!("mock-ft-{}", &fingerprint[..16]);
        let model = UnigramModel::from_texts(corpus.iter().map(|s| s.text.as_str()));
        if let Some(dir) = &self.state_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            crate::io::write_json(&dir.join(format!("{handle_id}.json")), &model)?;
        }
        self.models.write().unwrap().insert(handle_id.clone(), Arc::new(model));
        Ok(ModelHandle {
            handle_id,
            backend_id: MOCK_GENERATOR_ID.to_string(),
            fine_tuned: true,
            corpus_fingerprint: Some(fingerprint),
            training: Some(config.clone()),
        })
    }

    fn base_model(&self) -> ModelHandle {
        ModelHandle {
            handle_id: "mock-base".to_string(),
            backend_id: MOCK_GENERATOR_ID.to_string(),
            fine_tuned: false,
            corpus_fingerprint: None,
            training: None,
        }
    }

    fn complete(&self, model: &ModelHandle, prompt: &str, params: &SamplingParams, rng_seed: u64) -> Result<String> {
        let lm = self.resolve(model)?;
        Ok(format!("{prompt} {}", lm.primed(prompt).sample(params, rng_seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn sentence(text: &str) -> CleanSentence {
        CleanSentence {
            sentence_id: "x".into(),
            text: text.into(),
            source_tag: "t".into(),
            token_count: text::token_count(text),
        }
    }

    struct Echo;
    impl Generator for Echo {
        fn backend_id(&self) -> &str {
            "echo"
        }
        fn fine_tune(&self, _: &[CleanSentence], _: &TrainingConfig) -> Result<ModelHandle> {
            Ok(MockGenerator::new().base_model())
        }
        fn base_model(&self) -> ModelHandle {
            MockGenerator::new().base_model()
        }
        fn complete(&self, _: &ModelHandle, prompt: &str, _: &SamplingParams, _: u64) -> Result<String> {
            Ok(format!("{prompt}|done"))
        }
    }

    /// Fails the first call for every completion index divisible by 3, and
    /// every call for index 4.
    struct Flaky {
        calls: AtomicUsize,
        seen: std::sync::Mutex<std::collections::HashSet<u64>>,
    }
    impl Generator for Flaky {
        fn backend_id(&self) -> &str {
            "flaky"
        }
        fn fine_tune(&self, _: &[CleanSentence], _: &TrainingConfig) -> Result<ModelHandle> {
            unreachable!()
        }
        fn base_model(&self) -> ModelHandle {
            MockGenerator::new().base_model()
        }
        fn complete(&self, _: &ModelHandle, prompt: &str, _: &SamplingParams, seed: u64) -> Result<String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let idx = (0..10).find(|&i| completion_seed(1, 0, i) == seed).unwrap();
            if idx == 4 {
                return Err(Error::backend("flaky", "down"));
            }
            if idx % 3 == 0 && self.seen.lock().unwrap().insert(seed) {
                return Err(Error::backend("flaky", "transient"));
            }
            Ok(format!("{prompt} ok {idx}"))
        }
        fn max_concurrency(&self) -> Option<usize> {
            Some(1)
        }
    }

    fn one_seed() -> SeedSet {
        parse_seeds("# beliefs_about_self\nI win\n# beliefs_about_others\nThey lose\n").unwrap()
    }

    #[test]
    fn default_seeds() {
        let s = SeedSet::paper_default();
        assert_eq!(s.len(), 40);
        assert_eq!(s.count(BeliefCategory::SelfBeliefs), 20);
        assert_eq!(s.count(BeliefCategory::Others), 20);
        assert_eq!(s.seeds()[0].text, "I take advantage of others whenever I can.");
        assert_eq!(s.seeds()[20].text, "People are selfish.");
        assert_eq!(s.seeds()[39].text, "The human condition is weak and vulnerable to predation");
        assert_eq!(parse_seeds(&s.to_file_format()).unwrap(), s);
    }

    #[test]
    fn seed_parsing_errors() {
        let only_self = "# beliefs_about_self\nI win.\n";
        assert!(matches!(parse_seeds(only_self), Err(Error::Config(_))));
        assert!(matches!(parse_seeds("# beliefs_about_self\n...\n# beliefs_about_others\nx\n"), Err(Error::Config(_))));
        assert!(matches!(parse_seeds("orphan\n# beliefs_about_self\na\n"), Err(Error::Config(_))));
        assert!(matches!(parse_seeds("# beliefs_about_self\n# beliefs_about_others\nx\n"), Err(Error::Config(_))));
        assert!(matches!(parse_seeds("# hobbies\nx\n"), Err(Error::Config(_))));
    }

    #[test]
    fn custom_seeds_self_first() {
        let s = parse_seeds("# beliefs_about_others\nO1\nO2\n\n# beliefs_about_self\nS1\nS2\n").unwrap();
        let ids: Vec<_> = s.seeds().iter().map(|x| (x.seed_id, x.text.as_str())).collect();
        assert_eq!(ids, [(0, "S1"), (1, "S2"), (2, "O1"), (3, "O2")]);
    }

    #[test]
    fn load_seeds_missing_file() {
        assert!(matches!(load_seeds(Path::new("/no/such/seeds.txt")), Err(Error::Io { .. })));
    }

    #[test]
    fn mock_fine_tune_and_empty_corpus() {
        let g = MockGenerator::new();
        let h = fine_tune(&g, &[sentence("kill them all")], &TrainingConfig::default()).unwrap();
        assert!(h.fine_tuned);
        assert_eq!(h.training.as_ref().unwrap().learning_rate, 0.0001);
        assert!(matches!(fine_tune(&g, &[], &TrainingConfig::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn handle_round_trips_through_json() {
        let g = MockGenerator::new();
        let h = fine_tune(&g, &[sentence("a b c")], &TrainingConfig::default()).unwrap();
        let back: ModelHandle = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.training.unwrap().optimizer_name, "adafactor");
    }

    #[test]
    fn echo_backend_strips_prompt() {
        let seeds = parse_seeds("# beliefs_about_self\nI win\n# beliefs_about_others\nThey lose\n").unwrap();
        let params = SamplingParams {
            completions_per_seed: 1,
            ..SamplingParams::default()
        };
        let out = generate_completions(&Echo, &Echo.base_model(), &seeds, &params).unwrap();
        assert_eq!(out.candidates[0].text, "done");
        assert_eq!(out.candidates.len(), 2);
    }

    #[test]
    fn count_order_and_determinism() {
        let g = MockGenerator::new();
        let params = SamplingParams {
            completions_per_seed: 7,
            master_seed: 3,
            ..SamplingParams::default()
        };
        let seeds = SeedSet::paper_default();
        let a = generate_completions(&g, &g.base_model(), &seeds, &params).unwrap();
        assert_eq!(a.candidates.len(), 280);
        let keys: Vec<_> = a.candidates.iter().map(|c| (c.seed_id, c.completion_index)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let b = generate_completions(&g, &g.base_model(), &seeds, &params).unwrap();
        assert_eq!(a, b);
        let other = SamplingParams { master_seed: 4, ..params };
        assert_ne!(a, generate_completions(&g, &g.base_model(), &seeds, &other).unwrap());
    }

    #[test]
    fn failures_retry_once_then_degrade() {
        let g = Flaky {
            calls: AtomicUsize::new(0),
            seen: Default::default(),
        };
        let params = SamplingParams {
            completions_per_seed: 10,
            master_seed: 1,
            ..SamplingParams::default()
        };
        let out = generate_completions(&g, &g.base_model(), &one_seed_only(&one_seed()), &params).unwrap();
        assert_eq!(out.candidates.len(), 10);
        assert_eq!(out.failures, 1);
        assert_eq!(out.candidates[4].text, "");
        assert_eq!(out.candidates[3].text, "ok 3");
        // 10 first attempts + retries for 0, 3, 6, 9 and index 4
        assert_eq!(g.calls.load(Ordering::SeqCst), 15);
    }

    // generate_completions only needs seeds to be non-empty; build a
    // single-seed set by bypassing the category check.
    fn one_seed_only(seeds: &SeedSet) -> SeedSet {
        SeedSet {
            seeds: seeds.seeds()[..1].to_vec(),
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let g = MockGenerator::new();
        let bad = SamplingParams {
            top_p: 0.0,
            ..SamplingParams::default()
        };
        assert!(generate_completions(&g, &g.base_model(), &one_seed(), &bad).is_err());
    }

    #[test]
    fn fine_tuned_mock_uses_corpus_vocab() {
        let g = MockGenerator::new();
        let corpus = [sentence("blood blood blood knife"), sentence("knife blood")];
        let h = fine_tune(&g, &corpus, &TrainingConfig::default()).unwrap();
        let params = SamplingParams {
            completions_per_seed: 5,
            ..SamplingParams::default()
        };
        let out = generate_completions(&g, &h, &one_seed(), &params).unwrap();
        for c in &out.candidates {
            for w in text::words(&c.text) {
                assert!(["blood", "knife", "win", "lose"].contains(&w.as_str()), "{w}");
            }
        }
    }

    #[test]
    fn state_dir_lets_a_fresh_backend_resolve_handles() {
        let dir = tempfile::tempdir().unwrap();
        let g = MockGenerator::with_state_dir(dir.path());
        let h = fine_tune(&g, &[sentence("alpha beta")], &TrainingConfig::default()).unwrap();
        let params = SamplingParams::default();
        let a = g.complete(&h, "p", &params, 9).unwrap();
        let fresh = MockGenerator::with_state_dir(dir.path());
        assert_eq!(fresh.complete(&h, "p", &params, 9).unwrap(), a);
        assert!(MockGenerator::new().complete(&h, "p", &params, 9).is_err());
    }

    #[test]
    fn nucleus_truncation() {
        let lm = UnigramModel {
            vocab: vec![("a".into(), 8), ("b".into(), 1), ("c".into(), 1)],
        };
        let p = SamplingParams {
            temperature: 1.0,
            top_k: 0,
            top_p: 0.75,
            ..SamplingParams::default()
        };
        assert_eq!(lm.distribution(&p), vec![(0, 1.0)]);
        let p = SamplingParams { top_p: 0.85, ..p };
        let d = lm.distribution(&p);
        assert_eq!(d.len(), 2);
        assert!((d[0].1 - 8.0 / 9.0).abs() < 1e-12);
        let p = SamplingParams { top_k: 1, top_p: 1.0, ..p };
        assert_eq!(lm.distribution(&p), vec![(0, 1.0)]);
    }

    #[test]
    fn strip_prompt_variants() {
        assert_eq!(strip_prompt("I win", "I win | done "), "done");
        assert_eq!(strip_prompt("I win", "just continuation"), "just continuation");
        assert_eq!(strip_prompt(" I win ", "I win and more."), "and more.");
    }
}

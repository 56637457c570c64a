//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line regardless of capture flags.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pedant_core::datasets::{assemble_negative, select_lowest};
use pedant_core::embedding::{Embedder, HashingEmbedder, TableEmbedder};
use pedant_core::evaluation::{
    FoldConfig, SentenceScorer, SvmConfig, TrainedScorer, cross_validate, metrics_from_confusion, psycho_score,
};
use pedant_core::filtering::{FilterRule, apply_filters, paraphrase_filter};
use pedant_core::generation::{MockGenerator, generate_completions, Generator};
use pedant_core::ranking::{cosine, rank_and_select};
use pedant_core::sentiment::{LexiconSentiment, SentimentAnalyzer};
use pedant_core::text::{StopWords, normalize_word};
use pedant_core::{
    Candidate, CleanSentence, FilterConfig, Label, SamplingParams, ScoredCandidate, SeedSet, SelectionConfig, UserRecord,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($arg)+));
        }
    };
}

fn within(limit: Duration, started: Instant) -> Check {
    let took = started.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(())
}

fn c1_generation_count() -> Check {
    let started = Instant::now();
    let g = MockGenerator::new();
    let seeds = SeedSet::paper_default();
    ensure!(seeds.len() == 40, "{} seeds", seeds.len());
    let params = SamplingParams::default();
    ensure!(params.completions_per_seed == 200, "c = {}", params.completions_per_seed);
    let out = generate_completions(&g, &g.base_model(), &seeds, &params).map_err(|e| e.to_string())?;
    ensure!(out.candidates.len() == 8000, "{} candidates", out.candidates.len());
    let expected = (0..40).flat_map(|s| (0..200).map(move |i| (s, i)));
    for (c, (s, i)) in out.candidates.iter().zip(expected) {
        ensure!((c.seed_id, c.completion_index) == (s, i), "out of order at ({s}, {i})");
    }
    within(Duration::from_secs(10), started)
}

/// Builds 200 candidates over 4 seeds, each pattern aimed at one rule.
fn adversarial_fixture() -> Vec<Candidate> {
    let patterns: [&str; 10] = [
        "the PSYCHOPATH hurts them badly",            // 1
        "Sociopath, that is what they call me",       // 1
        "they suffer pain badly tonight",             // kept or 2/6
        "THEY   suffer pain badly tonight",           // 2
        "hate it",                                    // 3
        "I hate everyone that I meet and",            // 4
        "I love my friends and my family dearly",     // 5
        "so they suffer the pain badly tonight",      // 6 (stop words differ only)
        "the weather is grey",                        // 5 (neutral)
        "cruel fools deserve their miserable fate",   // kept
    ];
    let mut out = Vec::new();
    for seed_id in 0..4 {
        for completion_index in 0..50 {
            let p = patterns[(completion_index + seed_id) % patterns.len()];
            let text = match completion_index % 7 {
                // distinct variants keep rule 2 from swallowing everything
                0 if !p.contains("hate it") => format!("{p} {}", ["again", "now", "today", "forever"][seed_id]),
                _ => p.to_string(),
            };
            out.push(Candidate {
                seed_id,
                completion_index,
                text,
            });
        }
    }
    out
}

fn oracle_first_rule(cands: &[Candidate], sentiment: &dyn SentimentAnalyzer, embedder: &dyn Embedder) -> Vec<Option<u8>> {
    let banned = ["psychopath", "antisocial", "sociopath"];
    let stop = StopWords::english();
    let mut earlier: Vec<String> = Vec::new();
    let mut verdicts: Vec<Option<u8>> = Vec::new();
    for c in cands {
        let words: Vec<String> = c
            .text
            .split(|ch: char| !ch.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(|w| w.to_lowercase())
            .collect();
        let key = c.text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let dup = earlier.contains(&key);
        earlier.push(key);
        let tokens: Vec<&str> = c.text.split_whitespace().collect();
        let r = if words.iter().any(|w| banned.contains(&w.as_str())) {
            Some(1)
        } else if dup {
            Some(2)
        } else if tokens.len() < 3 {
            Some(3)
        } else if tokens.last().is_some_and(|t| stop.contains(&normalize_word(t))) {
            Some(4)
        } else {
            let s = sentiment.scores(&c.text).unwrap();
            if s.negative <= s.positive { Some(5) } else { None }
        };
        verdicts.push(r);
    }
    // rule 6: pairwise cosine against every earlier kept survivor of rules 1-5
    let vecs: Vec<Vec<f64>> = cands.iter().map(|c| embedder.embed_text(&c.text).unwrap()).collect();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..cands.len() {
        if verdicts[i].is_some() {
            continue;
        }
        if kept.iter().any(|&j| direct_cosine(&vecs[i], &vecs[j]) >= 0.9) {
            verdicts[i] = Some(6);
        } else {
            kept.push(i);
        }
    }
    verdicts
}

fn direct_cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 { 0.0 } else { dot / (nu * nv) }
}

fn c2_filter_conservation() -> Check {
    let cands = adversarial_fixture();
    ensure!(cands.len() == 200, "fixture has {}", cands.len());
    let sentiment = LexiconSentiment::default();
    let embedder = HashingEmbedder::new(64);
    let (survivors, report) =
        apply_filters(&cands, &FilterConfig::default(), &sentiment, &embedder).map_err(|e| e.to_string())?;
    ensure!(
        report.survivor_count + report.total_removed() == 200,
        "{} + {} != 200",
        report.survivor_count,
        report.total_removed()
    );
    ensure!(survivors.len() == report.survivor_count, "survivor count mismatch");
    let oracle = oracle_first_rule(&cands, &sentiment, &embedder);
    for (v, want) in report.verdicts.iter().zip(&oracle) {
        let got = v.removed_by.map(FilterRule::number);
        ensure!(got == *want, "({}, {}): rule {got:?}, oracle {want:?}", v.seed_id, v.completion_index);
    }
    for rule in FilterRule::ALL {
        ensure!(report.removed_by(rule) > 0, "rule {} never fired", rule.number());
    }
    let mut it = cands.iter();
    for s in &survivors {
        ensure!(it.any(|c| c == s), "survivors are not a subsequence of the input");
    }
    ensure!(FilterRule::TooShort.description().contains("contain less than three words"), "rule 3 text");
    ensure!(FilterRule::StopWordEnding.description().contains("end with a stop word"), "rule 4 text");
    ensure!(
        FilterRule::Sentiment.description().contains("higher positive than a negative sentiment"),
        "rule 5 text"
    );
    Ok(())
}

fn c3_paraphrase_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for pool in 0..100 {
        let n = rng.random_range(1..=100);
        let bases: Vec<Vec<f64>> = (0..rng.random_range(1..=6))
            .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let vecs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let b = &bases[rng.random_range(0..bases.len())];
                let noise = [0.0, 0.05, 0.2, 0.6][rng.random_range(0..4)];
                b.iter().map(|x| x + noise * rng.random_range(-1.0..1.0)).collect()
            })
            .collect();
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let e = TableEmbedder::new(8, words.iter().cloned().zip(vecs.clone()));
        let texts: Vec<&str> = words.iter().map(String::as_str).collect();
        let got = paraphrase_filter(&texts, &e, 0.9).map_err(|e| e.to_string())?;

        let m: Vec<Vec<f64>> = vecs.iter().map(|u| vecs.iter().map(|v| direct_cosine(u, v)).collect()).collect();
        let mut kept = vec![false; n];
        for i in 0..n {
            kept[i] = (0..i).all(|j| !kept[j] || m[i][j] < 0.9);
        }
        let want: Vec<usize> = (0..n).filter(|&i| kept[i]).collect();
        ensure!(got == want, "pool {pool}: {got:?} vs {want:?}");
    }
    Ok(())
}

fn c4_ranking_oracle() -> Check {
    const LEVELS: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // level l sits at angle 0.15·l from the lexicon direction
    let entries: Vec<(String, Vec<f64>)> = (0..LEVELS)
        .map(|l| {
            let a = 0.15 * l as f64;
            (format!("level{l}"), vec![a.cos(), a.sin()])
        })
        .collect();
    let e = TableEmbedder::new(2, entries);
    for pool in 0..100 {
        let n = rng.random_range(1..=500);
        let seeds = rng.random_range(1..=5);
        let mut cands: Vec<(Candidate, usize)> = Vec::new();
        let mut next = vec![0usize; seeds];
        for _ in 0..n {
            let s = rng.random_range(0..seeds);
            let l = rng.random_range(0..LEVELS);
            cands.push((
                Candidate {
                    seed_id: s,
                    completion_index: next[s],
                    text: format!("level{l}"),
                },
                l,
            ));
            next[s] += 1;
        }
        cands.sort_by_key(|(c, _)| (c.seed_id, c.completion_index));
        let k_total = if rng.random_bool(0.5) { 2000 } else { rng.random_range(50..=250) };
        let cfg = SelectionConfig {
            m_per_seed: 50,
            k_total,
        };
        let survivors: Vec<Candidate> = cands.iter().map(|(c, _)| c.clone()).collect();
        let got = rank_and_select(&survivors, &[1.0, 0.0], &e, &cfg).map_err(|e| e.to_string())?;

        // oracle: lower level means higher score
        let mut per_seed: BTreeMap<usize, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for (c, l) in &cands {
            per_seed.entry(c.seed_id).or_default().push((*l, c.seed_id, c.completion_index));
        }
        let mut union: Vec<(usize, usize, usize)> = per_seed
            .into_values()
            .flat_map(|mut g| {
                g.sort_by_key(|&(l, _, i)| (l, i));
                g.into_iter().take(50)
            })
            .collect();
        union.sort();
        union.truncate(k_total);
        union.sort_by_key(|&(l, s, i)| (s, l, i));
        let got_keys: Vec<(usize, usize)> = got.iter().map(|s| (s.candidate.seed_id, s.candidate.completion_index)).collect();
        let want_keys: Vec<(usize, usize)> = union.iter().map(|&(_, s, i)| (s, i)).collect();
        ensure!(got_keys == want_keys, "pool {pool}: selection differs from oracle");
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for s in &got {
            *counts.entry(s.candidate.seed_id).or_default() += 1;
        }
        ensure!(counts.values().all(|&c| c <= 50), "pool {pool}: per-seed cap exceeded");
    }
    Ok(())
}

fn c5_cosine() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..1000 {
        let d = rng.random_range(1..=64);
        let u: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let want = direct_cosine(&u, &v);
        ensure!((cosine(&u, &v) - want).abs() < 1e-9, "pair {k}");
        ensure!((cosine(&u, &u) - 1.0).abs() < 1e-9, "self-cosine {k}");
        ensure!(cosine(&u, &vec![0.0; d]) == 0.0, "zero vector {k}");
    }
    Ok(())
}

fn c6_negative_selection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for round in 0..20 {
        let scores: Vec<f64> = (0..8000)
            .map(|_| if rng.random_bool(0.2) { (rng.random_range(0..50) as f64) / 50.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let got = select_lowest(&scores, 1700);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
        ensure!(got == order[..1700], "round {round}: bottom-1700 differs from full sort");
    }

    let words = ["storm", "traffic", "queue", "printer", "rain", "delay", "noise", "leak"];
    let pool: Vec<CleanSentence> = (0..1200)
        .map(|i| CleanSentence {
            sentence_id: format!("bg:{i}#0"),
            text: format!("{} {} {} was awful today", words[i % 8], words[(i / 8) % 8], words[(i / 64) % 8]) + &format!(" {i}x"),
            source_tag: "bg".into(),
            token_count: 7,
        })
        .collect();
    let e = HashingEmbedder::new(16);
    let lexvec = pedant_core::ranking::lexicon_vector(&pedant_core::PersonalityLexicon::paper_default(), &e)
        .map_err(|e| e.to_string())?;
    let s = LexiconSentiment::default();
    let cfg = FilterConfig {
        paraphrase_threshold: 1.0,
        ..FilterConfig::default()
    };
    let run = |seed| assemble_negative(&pool, &lexvec.vector, &e, &cfg, &s, 800, 170, seed, &HashSet::new()).unwrap();
    let a = run(11);
    ensure!(a.sentences.len() == 170, "{} negatives", a.sentences.len());
    ensure!(a == run(11), "not deterministic under a fixed seed");
    ensure!(a.sentences != run(12).sentences, "seed has no effect");
    Ok(())
}

struct Table(HashMap<String, f64>);
impl SentenceScorer for Table {
    fn score(&self, s: &str) -> f64 {
        self.0[s]
    }
}

fn c7_psycho_score() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for u in 0..200 {
        let n = rng.random_range(1..=40);
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let scorer = TrainedScorer::new("t", Box::new(Table(names.iter().cloned().zip(vals.iter().copied()).collect())));
        let mut user = UserRecord {
            user_id: format!("u{u}"),
            sentences: names,
            label: Label::Positive,
        };
        let mean = vals.iter().sum::<f64>() / n as f64;
        let a = psycho_score(&scorer, &user).map_err(|e| e.to_string())?;
        ensure!((a.score - mean).abs() <= 1e-12, "user {u}: {} vs {mean}", a.score);
        user.sentences.shuffle(&mut rng);
        let b = psycho_score(&scorer, &user).map_err(|e| e.to_string())?;
        ensure!((a.score - b.score).abs() <= 1e-12, "user {u}: not permutation invariant");
        ensure!((0.0..=1.0).contains(&a.score), "user {u}: out of range");
    }
    Ok(())
}

fn oracle_metrics(tp: usize, fp: usize, fn_: usize, tn: usize) -> (f64, f64, f64, f64) {
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let f1 = |t: usize, f_p: usize, f_n: usize| div(2 * t, 2 * t + f_p + f_n);
    let pos = f1(tp, fp, fn_);
    let neg = f1(tn, fn_, fp);
    (div(tp, tp + fp), div(tp, tp + fn_), pos, (pos + neg) / 2.0)
}

fn c8_metric_math() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..1000 {
        let mut draw = || if rng.random_bool(0.1) { 0 } else { rng.random_range(0..60) };
        let (tp, fp, fn_, tn) = (draw(), draw(), draw(), draw());
        let m = metrics_from_confusion(tp, fp, fn_, tn);
        let (p, r, f1, macro_f1) = oracle_metrics(tp, fp, fn_, tn);
        for (name, got, want) in [("precision", m.precision, p), ("recall", m.recall, r), ("f1", m.f1, f1), ("macro_f1", m.macro_f1, macro_f1)] {
            ensure!((got - want).abs() < 1e-12, "matrix {k} ({tp},{fp},{fn_},{tn}): {name} {got} vs {want}");
        }
    }
    let m = metrics_from_confusion(1, 0, 1, 2);
    let shown = format!("{:.1} {:.1} {:.3} {:.3}", m.precision, m.recall, m.f1, m.macro_f1);
    ensure!(shown == "1.0 0.5 0.667 0.733", "hand case gave {shown}");
    Ok(())
}

fn normal_scores(mu_pos: f64, mu_neg: f64, sd: f64, seed: u64) -> Vec<(f64, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Normal::new(mu_pos, sd).unwrap();
    let q = Normal::new(mu_neg, sd).unwrap();
    let mut out: Vec<(f64, Label)> = (0..200).map(|_| (p.sample(&mut rng).clamp(0.0, 1.0), Label::Positive)).collect();
    out.extend((0..200).map(|_| (q.sample(&mut rng).clamp(0.0, 1.0), Label::Negative)));
    out
}

fn c9_evaluation_harness() -> Check {
    let started = Instant::now();
    let fold = FoldConfig {
        master_seed: 9,
        ..FoldConfig::default()
    };
    ensure!((fold.folds, fold.n_per_class) == (5, 100), "fold defaults changed");
    let svm = SvmConfig::default();
    ensure!(svm.c == 1.0, "C default changed");
    let sep = cross_validate(&normal_scores(0.8, 0.2, 0.05, 91), &fold, &svm).map_err(|e| e.to_string())?;
    ensure!(sep.metrics.macro_f1 >= 0.95, "separable macro-F1 {}", sep.metrics.macro_f1);
    let same = cross_validate(&normal_scores(0.5, 0.5, 0.15, 92), &fold, &svm).map_err(|e| e.to_string())?;
    ensure!(
        (0.35..=0.65).contains(&same.metrics.macro_f1),
        "identical-distribution macro-F1 {}",
        same.metrics.macro_f1
    );
    within(Duration::from_secs(60), started)
}

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

fn run_pedant(config: &Path, out: &Path) -> Check {
    let status = Command::new(env!("CARGO_BIN_EXE_pedant"))
        .args(["all", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "pedant exited with {:?}: {}",
        status.status.code(),
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(())
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10_end_to_end_determinism() -> Check {
    let started = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let config = toy_dir().join("toy.toml");
    run_pedant(&config, &a)?;
    run_pedant(&config, &b)?;
    let (ta, tb) = (tree(&a), tree(&b));
    for stage in ["corpus", "model", "candidates", "filtered", "scored", "dataset", "eval"] {
        let manifest = PathBuf::from("toy").join(stage).join("manifest.json");
        ensure!(ta.contains_key(&manifest), "missing {}", manifest.display());
    }
    ensure!(ta.keys().eq(tb.keys()), "artifact trees list different files");
    for (path, bytes) in &ta {
        ensure!(tb[path] == *bytes, "{} differs between runs", path.display());
    }
    within(Duration::from_secs(60), started)
}

/// Copies the toy fixture into `dir` with a different variant.
fn toy_variant(dir: &Path, variant: &str) -> PathBuf {
    for entry in std::fs::read_dir(toy_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
        }
    }
    let config = dir.join("toy.toml");
    let body = std::fs::read_to_string(&config).unwrap().replace("variant = \"DEXTER\"", &format!("variant = \"{variant}\""));
    std::fs::write(&config, body).unwrap();
    config
}

fn c11_variant_semantics() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;

    let minus = tmp.path().join("minus");
    std::fs::create_dir(&minus).unwrap();
    run_pedant(&toy_variant(&minus, "DEXTER_MINUS"), &minus.join("out"))?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(minus.join("out/toy/dataset/manifest.json")).unwrap()).unwrap();
    ensure!(manifest["fine_tuned"] == serde_json::json!(false), "DEXTER_MINUS manifest: {manifest}");
    ensure!(manifest["variant"] == "DEXTER_MINUS", "variant recorded as {}", manifest["variant"]);

    let prelim = tmp.path().join("prelim");
    std::fs::create_dir(&prelim).unwrap();
    run_pedant(&toy_variant(&prelim, "PRELIM"), &prelim.join("out"))?;
    let run = prelim.join("out/toy");
    let corpus: HashSet<String> = read_rows::<CleanSentence>(&run.join("corpus/sentences.jsonl")).into_iter().map(|s| s.text).collect();
    let dataset: Vec<serde_json::Value> = read_rows(&run.join("dataset/dataset.jsonl"));
    let positives: Vec<&str> = dataset.iter().filter(|r| r["label"] == "POSITIVE").map(|r| r["text"].as_str().unwrap()).collect();
    ensure!(!positives.is_empty(), "PRELIM produced no positives");
    for p in &positives {
        ensure!(corpus.contains(*p), "PRELIM positive not in corpus: {p}");
    }
    let scored: Vec<ScoredCandidate> = read_rows(&run.join("scored/scored.jsonl"));
    ensure!(scored.iter().all(|s| s.candidate.seed_id == 0), "PRELIM candidates must come from the corpus");
    Ok(())
}

fn read_rows<T: serde::de::DeserializeOwned>(p: &Path) -> Vec<T> {
    pedant_core::io::read_jsonl(p).unwrap()
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("generation count", c1_generation_count),
        ("filter conservation and attribution", c2_filter_conservation),
        ("paraphrase-filter oracle", c3_paraphrase_oracle),
        ("ranking oracle", c4_ranking_oracle),
        ("cosine correctness", c5_cosine),
        ("negative assembly oracle", c6_negative_selection),
        ("psychoscore", c7_psycho_score),
        ("metric math", c8_metric_math),
        ("evaluation harness discrimination", c9_evaluation_harness),
        ("end-to-end determinism", c10_end_to_end_determinism),
        ("variant semantics", c11_variant_semantics),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let ms = started.elapsed().as_millis();
        match result {
            Ok(()) => println!("PASS criterion {:>2}: {name} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} ({ms} ms): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

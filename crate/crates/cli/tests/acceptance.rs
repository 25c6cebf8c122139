//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! measurement, then asserts.
//!
//! Run with `cargo test -p docalign --test acceptance -- --nocapture` to see
//! the lines.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use docalign_core::cda::{align_corpus, match_one_to_one, AlignStats, ScoreEntry};
use docalign_core::corpus::{group_by_domain, DocumentRecord};
use docalign_core::eval::{evaluate_recall, GoldSet, RecallReport};
use docalign_core::lexicon::build_alignment;
use docalign_core::miner::mine_identifiers;
use docalign_core::synthetic::{generate, DictionaryNoise, SyntheticConfig, SyntheticCorpus, Topics, UrlStyle};
use docalign_core::urlmatch::{align_urls, strip_identifiers, urls_match, UrlStripOptions};
use docalign_core::vectorspace::{
    build_vocabulary, compute_idf, language_vocabulary, project_corpus, vectorize, IdfModel, ProjectionParams,
};
use docalign_core::{AlignmentPair, IdentifierSet, Matching, Method, ScoreMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, name: &str, ok: bool, detail: &str, elapsed: Duration) {
    println!(
        "criterion {n} {name}: {} ({detail}; {:.2?})",
        if ok { "PASS" } else { "FAIL" },
        elapsed
    );
}

// In-memory pipeline: vocabularies, lexicons, projection, alignment.
fn align_in_memory(corpus: &SyntheticCorpus, capacity: usize, threshold: f64) -> (Vec<AlignmentPair>, AlignStats) {
    let parts = corpus.partitions();
    let params = ProjectionParams {
        pivot_lang: corpus.pivot_lang.clone(),
        capacity,
        ..Default::default()
    };
    let vocab = language_vocabulary(&parts, &params.pivot_lang, &params);
    let mut alignments = BTreeMap::new();
    for (lang, (fwd, bwd)) in &corpus.tables {
        let other = language_vocabulary(&parts, lang, &params);
        alignments.insert(lang.clone(), build_alignment(fwd, bwd, &vocab.words, &other.words).unwrap());
    }
    let proj = project_corpus(&parts, &alignments, &vocab, &params).unwrap();
    let langs: Vec<String> = corpus.tables.keys().cloned().collect();
    align_corpus(&parts, &proj.vectors, &params.pivot_lang, &langs, threshold, Matching::Greedy).unwrap()
}

fn recall(corpus: &SyntheticCorpus, pairs: &[AlignmentPair]) -> RecallReport {
    let gold = GoldSet::multilingual(corpus.gold_triples(), Default::default()).unwrap();
    evaluate_recall(pairs, &gold, true).unwrap()
}

#[test]
fn criterion_1_idf_and_norms_match_direct_evaluation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_idf = 0.0f64;

    // Grid of collection sizes and document frequencies, including the edges.
    for round in 0..400 {
        let n: usize = match round {
            0 => 1,
            1 => 10_000,
            _ => rng.random_range(1..=10_000),
        };
        let mut dfs: Vec<u32> = vec![0, n as u32];
        dfs.extend((0..20).map(|_| rng.random_range(0..=n as u32)));
        let model = IdfModel::from_doc_freq(n, dfs.clone()).unwrap();
        for (dim, &df) in dfs.iter().enumerate() {
            let oracle = (1.0 + n as f64 / (1.0 + df as f64)).ln();
            worst_idf = worst_idf.max((model.get(dim as u32) - oracle).abs());
        }
    }

    // Document frequencies counted from an actual collection.
    let words: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
    let docs: Vec<Vec<String>> = (0..300)
        .map(|_| {
            let len = rng.random_range(0..40);
            (0..len).map(|_| words[rng.random_range(0..words.len())].clone()).collect()
        })
        .collect();
    let vocab = build_vocabulary(docs.iter().map(Vec::as_slice), 5, 40, None);
    let idf = compute_idf(docs.iter().map(Vec::as_slice), &vocab).unwrap();
    for (dim, w) in vocab.words.iter().enumerate() {
        let df = docs.iter().filter(|d| d.contains(w)).count();
        assert_eq!(idf.doc_freq[dim] as usize, df, "{w}");
        let oracle = (1.0 + docs.len() as f64 / (1.0 + df as f64)).ln();
        worst_idf = worst_idf.max((idf.get(dim as u32) - oracle).abs());
    }

    // Vector weights against a hash-map recount, and unit norms.
    let mut worst_norm = 0.0f64;
    let mut worst_weight = 0.0f64;
    for (i, d) in docs.iter().enumerate() {
        let v = vectorize(&format!("d{i}"), d, &vocab, &idf);
        let mut tf: HashMap<u32, f64> = HashMap::new();
        for t in d {
            if let Some(id) = vocab.id(t) {
                *tf.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let raw: HashMap<u32, f64> = tf.iter().map(|(&k, &c)| (k, c * idf.get(k))).collect();
        let norm = raw.values().map(|w| w * w).sum::<f64>().sqrt();
        if raw.is_empty() {
            assert!(v.is_empty());
            continue;
        }
        worst_norm = worst_norm.max((v.norm() - 1.0).abs());
        assert_eq!(v.entries.len(), raw.len());
        for &(dim, w) in &v.entries {
            worst_weight = worst_weight.max((w - raw[&dim] / norm).abs());
        }
    }

    let elapsed = start.elapsed();
    let ok = worst_idf <= 1e-12 && worst_norm <= 1e-9 && worst_weight <= 1e-12 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "formula exactness",
        ok,
        &format!("max idf error {worst_idf:.1e}, max norm error {worst_norm:.1e}, max weight error {worst_weight:.1e}"),
        elapsed,
    );
    assert!(ok);
}

// Full sort by (score desc, pivot URL, other URL), then a scan that keeps
// entries whose endpoints are both unused.
fn brute_force_greedy(m: &ScoreMatrix) -> Vec<AlignmentPair> {
    let mut all: Vec<&ScoreEntry> = m.entries.iter().collect();
    all.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(m.rows[a.row as usize].cmp(&m.rows[b.row as usize]))
            .then(m.cols[a.col as usize].cmp(&m.cols[b.col as usize]))
    });
    let mut row_used = vec![false; m.rows.len()];
    let mut col_used = vec![false; m.cols.len()];
    let mut out = Vec::new();
    for e in all {
        let (r, c) = (e.row as usize, e.col as usize);
        if row_used[r] || col_used[c] {
            continue;
        }
        row_used[r] = true;
        col_used[c] = true;
        out.push(AlignmentPair {
            domain: m.domain.clone(),
            pivot_url: m.rows[r].clone(),
            other_url: m.cols[c].clone(),
            other_lang: m.other_lang.clone(),
            score: e.score,
            method: Method::Cda,
        });
    }
    out
}

fn random_matrix(rng: &mut ChaCha8Rng) -> ScoreMatrix {
    let (nr, nc) = (rng.random_range(1..=100usize), rng.random_range(1..=100usize));
    let density: f64 = rng.random_range(0.01..=1.0);
    // Coarse scores force many ties; shuffled URL names decouple URL order
    // from index order.
    let levels: u32 = if rng.random_bool(0.5) { 10 } else { 1_000_000 };
    let name = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| {
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(rng);
        ids.into_iter().map(|i| format!("http://d.example/{prefix}{i:03}")).collect::<Vec<_>>()
    };
    let rows = name("p", nr, rng);
    let cols = name("o", nc, rng);
    let mut entries = Vec::new();
    for row in 0..nr as u32 {
        for col in 0..nc as u32 {
            if rng.random_bool(density) {
                let score = rng.random_range(1..=levels) as f64 / levels as f64;
                entries.push(ScoreEntry { row, col, score });
            }
        }
    }
    ScoreMatrix {
        domain: "d.example".into(),
        other_lang: "fr".into(),
        rows,
        cols,
        entries,
        candidates_scored: 0,
    }
}

#[test]
fn criterion_2_matcher_equals_brute_force_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut pairs = 0;
    for _ in 0..500 {
        let m = random_matrix(&mut rng);
        let got = match_one_to_one(&m, Matching::Greedy);
        let want = brute_force_greedy(&m);
        pairs += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && elapsed < Duration::from_secs(10);
    verdict(
        2,
        "matcher oracle equivalence",
        ok,
        &format!("500 matrices, {pairs} pairs, {mismatches} mismatches"),
        elapsed,
    );
    assert!(ok);
}

fn write_fixture(dir: &Path, corpus: &SyntheticCorpus, vocab_size: usize) -> PathBuf {
    let file = |name: &str| fs::File::create(dir.join(name)).unwrap();
    corpus.write_jsonl(file("docs.jsonl")).unwrap();
    corpus.write_gold(file("gold.tsv")).unwrap();
    let mut config = format!(
        "inputs = [\"docs.jsonl\"]\npivot = \"{}\"\nlangs = {:?}\nout_dir = \"out\"\ngold = \"gold.tsv\"\n\n\
         [params]\nvocab_size = {vocab_size}\nthreshold = 0.1\n",
        corpus.pivot_lang,
        corpus.tables.keys().collect::<Vec<_>>(),
    );
    for (lang, (fwd, bwd)) in &corpus.tables {
        let (f, b) = (format!("{}-{lang}.tsv", corpus.pivot_lang), format!("{lang}-{}.tsv", corpus.pivot_lang));
        SyntheticCorpus::write_table(fwd, file(&f)).unwrap();
        SyntheticCorpus::write_table(bwd, file(&b)).unwrap();
        config.push_str(&format!("\n[lexicon.{lang}]\nforward = \"{f}\"\nbackward = \"{b}\"\n"));
    }
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    path
}

fn docalign(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_docalign"))
        .args(args)
        .output()
        .expect("docalign binary runs")
}

fn run_config(config: &Path, out: &Path) {
    let output = docalign(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn criterion_3_synthetic_end_to_end_recall() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&SyntheticConfig {
        domains: 20,
        pivot_docs_per_domain: 50,
        vocab_size: 2000,
        dropout: 0.1,
        dictionary: DictionaryNoise::bijective(),
        ..Default::default()
    });
    let config = write_fixture(dir.path(), &corpus, 1000);
    let start = Instant::now();
    run_config(&config, &dir.path().join("out"));
    let elapsed = start.elapsed();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let r = report["cda"]["recall"].as_f64().unwrap();
    let url = report["url"]["recall"].as_f64().unwrap();
    let ok = r >= 99.0 && elapsed < Duration::from_secs(60);
    verdict(
        3,
        "synthetic end-to-end recall",
        ok,
        &format!(
            "recall@1 {r:.2} over {} gold pairs via `docalign run`, url baseline {url:.2}",
            corpus.gold.len()
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_4_larger_vocabulary_beats_tiny_vocabulary() {
    let start = Instant::now();
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..5 {
        let corpus = generate(&SyntheticConfig {
            seed,
            dictionary: DictionaryNoise::noisy(),
            ..Default::default()
        });
        let big = recall(&corpus, &align_in_memory(&corpus, 1000, 0.1).0).recall;
        let small = recall(&corpus, &align_in_memory(&corpus, 50, 0.1).0).recall;
        wins += usize::from(big > small);
        detail.push(format!("{big:.1}/{small:.1}"));
    }
    let ok = wins >= 3;
    verdict(
        4,
        "vocabulary-size ordering",
        ok,
        &format!("|V|=1000 beats |V|=50 on {wins}/5 seeds, recall {}", detail.join(" ")),
        start.elapsed(),
    );
    assert!(ok);
}

fn strip_cases() -> Vec<(&'static str, UrlStripOptions, Vec<&'static str>)> {
    let d = UrlStripOptions::default();
    let host = UrlStripOptions { host_labels: true, ..d };
    vec![
        ("xyz.ca/fr/index.htm", d, vec!["xyz.ca/fr/index.htm", "xyz.ca/index.htm"]),
        ("xyz.ca/index.htm", d, vec!["xyz.ca/index.htm"]),
        ("http://a.com/en/fr/x", d, vec!["http://a.com/en/fr/x", "http://a.com/en/x", "http://a.com/fr/x"]),
        ("a.com/index-fr.htm", d, vec!["a.com/index-fr.htm", "a.com/index.htm"]),
        ("a.com/index_fr.htm", d, vec!["a.com/index.htm", "a.com/index_fr.htm"]),
        ("a.com/index.fr.htm", d, vec!["a.com/index.fr.htm", "a.com/index.htm"]),
        ("a.com/fr/", d, vec!["a.com/", "a.com/fr/"]),
        ("a.com/fr", d, vec!["a.com", "a.com/fr"]),
        ("a.com/p?lang=fr&x=1", d, vec!["a.com/p?lang=fr&x=1", "a.com/p?x=1"]),
        ("a.com/p?lang=fr", d, vec!["a.com/p", "a.com/p?lang=fr"]),
        ("HTTPS://A.COM/DE/x#Top", d, vec!["https://a.com/de/x#top", "https://a.com/x#top"]),
        ("fr.a.com/p", d, vec!["fr.a.com/p"]),
        ("fr.a.com/p", host, vec!["a.com/p", "fr.a.com/p"]),
        ("a.com/french/x", d, vec!["a.com/french/x", "a.com/x"]),
        ("a.com/de-fr/x", d, vec!["a.com/de-fr/x", "a.com/de/x", "a.com/fr/x"]),
    ]
}

// Five URL shapes per (host, identifier); the expected outcome follows from
// the shape alone.
fn match_cases() -> Vec<(String, String, bool)> {
    let hosts = [
        "xyz.ca",
        "http://www.example.com",
        "https://shop.example.co.uk",
        "HTTP://News.Example.ORG",
        "example.net",
    ];
    let ids = ["fr", "de", "es", "french", "ja", "zh", "pt", "DE"];
    let mut cases = Vec::new();
    for h in hosts {
        for id in ids {
            cases.push((format!("{h}/index.htm"), format!("{h}/{id}/index.htm"), true));
            cases.push((format!("{h}/about/team.html"), format!("{h}/about/team-{id}.html"), true));
            cases.push((format!("{h}/en/news/a.htm"), format!("{h}/{id}/news/a.htm"), true));
            cases.push((format!("{h}/news/one.htm"), format!("{h}/{id}/news/two.htm"), false));
            cases.push((format!("{h}/index.htm"), format!("other.example/{id}/index.htm"), false));
        }
    }
    cases
}

#[test]
fn criterion_5_url_baseline_table() {
    let start = Instant::now();
    let ids = IdentifierSet::default();
    let opts = UrlStripOptions::default();
    for filler in ["index", "htm", "html", "about", "team", "news", "one", "two", "a", "p", "x", "lang"] {
        assert!(!ids.contains(filler), "`{filler}` must not be an identifier");
    }

    let docs = [("xyz.ca/index.htm", "en"), ("xyz.ca/fr/index.htm", "fr")].map(|(url, lang)| DocumentRecord {
        url: url.into(),
        domain: "xyz.ca".into(),
        lang: lang.into(),
        tokens: Vec::new(),
        raw_length: 0,
    });
    let pairs = align_urls(&group_by_domain(docs), "en", &["fr".into()], &ids, &opts);
    let example_ok = pairs.len() == 1
        && pairs[0].pivot_url == "xyz.ca/index.htm"
        && pairs[0].other_url == "xyz.ca/fr/index.htm";

    let mut failures = Vec::new();
    let strips = strip_cases();
    for (url, o, want) in &strips {
        let got: Vec<String> = strip_identifiers(url, &ids, o).into_iter().collect();
        if got != *want {
            failures.push(format!("strip {url}: {got:?}"));
        }
    }
    let matches = match_cases();
    for (a, b, want) in &matches {
        if urls_match(a, b, &ids, &opts) != *want || urls_match(b, a, &ids, &opts) != *want {
            failures.push(format!("match {a} ~ {b}"));
        }
    }
    let elapsed = start.elapsed();
    let ok = example_ok && failures.is_empty() && matches.len() == 200 && elapsed < Duration::from_secs(1);
    verdict(
        5,
        "URL baseline correctness",
        ok,
        &format!(
            "xyz.ca example {}, {} match and {} strip cases, {} failures",
            if example_ok { "aligned" } else { "NOT aligned" },
            matches.len(),
            strips.len(),
            failures.len()
        ),
        elapsed,
    );
    assert!(ok, "{failures:#?}");
}

#[test]
fn criterion_6_identifier_mining() {
    let start = Instant::now();
    let example = AlignmentPair {
        domain: "www.visitsingapore.com".into(),
        pivot_url: "www.visitsingapore.com/en/".into(),
        other_url: "www.visitsingapore.com/vi_vn/".into(),
        other_lang: "vi".into(),
        score: 1.0,
        method: Method::Cda,
    };
    let mined = mine_identifiers(&[example], 1, true);
    let example_ok = mined.len() == 1
        && (mined[0].token_pivot.as_str(), mined[0].token_other.as_str(), mined[0].support) == ("en", "vi_vn", 1);

    let corpus = generate(&SyntheticConfig {
        domains: 3,
        pivot_docs_per_domain: 20,
        vocab_size: 500,
        doc_len: (60, 100),
        url_style: UrlStyle::FakeIdentifier("zzlang".into()),
        ..Default::default()
    });
    let (pairs, _) = align_in_memory(&corpus, 400, 0.1);
    let mined = mine_identifiers(&pairs, 1, true);
    let top = mined.first();
    let synthetic_ok = !pairs.is_empty()
        && top.is_some_and(|c| c.token_pivot.is_empty() && c.token_other == "zzlang" && c.support == pairs.len());
    let elapsed = start.elapsed();
    let ok = example_ok && synthetic_ok && elapsed < Duration::from_secs(1);
    verdict(
        6,
        "identifier mining",
        ok,
        &format!(
            "(en, vi_vn) support 1: {example_ok}; fake token {:?} over {} pairs",
            top.map(|c| (&c.token_other, c.support)),
            pairs.len()
        ),
        elapsed,
    );
    assert!(ok, "{mined:?}");
}

#[test]
fn criterion_7_runs_are_byte_identical() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&SyntheticConfig {
        seed: 7,
        domains: 4,
        pivot_docs_per_domain: 25,
        other_langs: vec!["fr".into(), "de".into()],
        dictionary: DictionaryNoise::noisy(),
        url_style: UrlStyle::Parallel,
        ..Default::default()
    });
    let config = write_fixture(dir.path(), &corpus, 1000);
    let read = |out: &str, file: &str| fs::read(dir.path().join(out).join(file)).unwrap();

    run_config(&config, &dir.path().join("a"));
    let first = (read("a", "pairs.tsv"), read("a", "manifest.json"));
    // Same directory again: every stage is skipped.
    run_config(&config, &dir.path().join("a"));
    let rerun = (read("a", "pairs.tsv"), read("a", "manifest.json"));
    // Fresh directory: every stage runs.
    run_config(&config, &dir.path().join("b"));
    let fresh = (read("b", "pairs.tsv"), read("b", "manifest.json"));

    let ok = !first.0.is_empty() && first == rerun && first == fresh;
    verdict(
        7,
        "determinism",
        ok,
        &format!(
            "pairs.tsv {} bytes, manifest {} bytes, identical across rerun and fresh run",
            first.0.len(),
            first.1.len()
        ),
        start.elapsed(),
    );
    assert!(ok);
}

#[test]
fn criterion_8_scale_smoke_test() {
    let corpus = generate(&SyntheticConfig {
        seed: 8,
        domains: 10,
        pivot_docs_per_domain: 2500,
        other_langs: vec!["fr".into(), "de".into(), "cs".into()],
        doc_len: (40, 80),
        topics: Some(Topics {
            count: 250,
            words_per_topic: 40,
            background_words: 100,
            background_share: 0.5,
        }),
        ..Default::default()
    });
    let docs = corpus.records.len();
    let start = Instant::now();
    let (pairs, stats) = align_in_memory(&corpus, 10_000, 0.1);
    let elapsed = start.elapsed();
    let r = recall(&corpus, &pairs).recall;
    let ratio = stats.candidates_scored as f64 / stats.full_product as f64;
    let ok = docs == 100_000 && ratio < 0.01 && elapsed < Duration::from_secs(300);
    verdict(
        8,
        "scale smoke test",
        ok,
        &format!(
            "{docs} documents, {} matrices, scored {} of {} pairs ({:.3}%), recall {r:.2}, {} workers",
            stats.matrices,
            stats.candidates_scored,
            stats.full_product,
            ratio * 100.0,
            rayon::current_num_threads()
        ),
        elapsed,
    );
    assert!(ok);
}

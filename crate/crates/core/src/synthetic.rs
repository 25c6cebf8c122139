//! Seeded synthetic multilingual corpora with known gold alignments.
//!
//! Pivot documents are drawn from a Zipf distribution over pseudo-words
//! (optionally inside topic blocks). Each other-language counterpart is the
//! token-wise image of its pivot document under a hidden dictionary, with
//! dropout noise. Translation tables are derived from the same dictionary
//! with optional distractor mass and errors.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::Serialize;

use crate::corpus::{group_by_domain, CorpusPartition, DocumentRecord};
use crate::lexicon::TranslationTable;

/// Imperfections of the hidden dictionary and of the tables derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryNoise {
    /// Share of pivot words with a second translation, chosen per occurrence.
    pub synonym_rate: f64,
    /// Share of pivot words that reuse another word's translation.
    pub merge_rate: f64,
    /// Share of table rows whose largest entry is a wrong word.
    pub wrong_rate: f64,
    /// Random wrong entries added to every table row.
    pub distractors: usize,
}

impl DictionaryNoise {
    /// A one-to-one dictionary; tables carry small distractor mass only.
    pub fn bijective() -> Self {
        DictionaryNoise {
            synonym_rate: 0.0,
            merge_rate: 0.0,
            wrong_rate: 0.0,
            distractors: 2,
        }
    }

    pub fn noisy() -> Self {
        DictionaryNoise {
            synonym_rate: 0.2,
            merge_rate: 0.2,
            wrong_rate: 0.25,
            distractors: 3,
        }
    }
}

/// Topic structure: every document uses a shared background list plus the
/// words of one topic, so documents of different topics share few terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Topics {
    pub count: usize,
    pub words_per_topic: usize,
    /// Size of the background list, ranked first by frequency.
    pub background_words: usize,
    /// Probability that a token comes from the background list.
    pub background_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UrlStyle {
    /// `http://host/page.html` and `http://host/<lang>/page.html`.
    Parallel,
    /// Unrelated random paths per language.
    Opaque,
    /// `http://host/page.html` and `http://host/<token>/page.html`.
    FakeIdentifier(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub domains: usize,
    pub pivot_docs_per_domain: usize,
    pub pivot_lang: String,
    pub other_langs: Vec<String>,
    /// Distinct pivot words; ignored when `topics` is set.
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    /// Inclusive token-count range of pivot documents.
    pub doc_len: (usize, usize),
    /// Probability of dropping each token of a translated document.
    pub dropout: f64,
    pub dictionary: DictionaryNoise,
    pub topics: Option<Topics>,
    pub url_style: UrlStyle,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            domains: 20,
            pivot_docs_per_domain: 50,
            pivot_lang: "en".into(),
            other_langs: vec!["fr".into()],
            vocab_size: 2000,
            zipf_exponent: 1.0,
            doc_len: (150, 300),
            dropout: 0.1,
            dictionary: DictionaryNoise::bijective(),
            topics: None,
            url_style: UrlStyle::Opaque,
        }
    }
}

/// Gold counterpart of a pivot document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GoldPair {
    pub pivot_url: String,
    pub other_url: String,
    pub other_lang: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pivot_lang: String,
    pub records: Vec<DocumentRecord>,
    /// Per other language: (pivot→other, other→pivot).
    pub tables: BTreeMap<String, (TranslationTable, TranslationTable)>,
    pub gold: Vec<GoldPair>,
}

struct Dictionary {
    // translations[i] lists the images of pivot word i (1 or 2 words).
    translations: Vec<Vec<u32>>,
    other_words: Vec<String>,
}

const SYLLABLE_SETS: &[(&str, &str)] = &[
    ("bdfgklmnprstvz", "aeiou"),
    ("bcdfghjlmnpqrstv", "aeiouy"),
    ("dfgklmnprstwz", "aeiou"),
    ("bcdfgjklmnprstvxz", "aeiou"),
    ("bdghklmnprstvy", "aeiou"),
];

fn word_factory(
    rng: &mut ChaCha8Rng,
    taken: &mut HashSet<String>,
    flavour: usize,
    n: usize,
) -> Vec<String> {
    let (cons, vows) = SYLLABLE_SETS[flavour % SYLLABLE_SETS.len()];
    let cons: Vec<char> = cons.chars().collect();
    let vows: Vec<char> = vows.chars().collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(cons[rng.random_range(0..cons.len())]);
            w.push(vows[rng.random_range(0..vows.len())]);
        }
        if flavour > 0 && rng.random_bool(0.3) {
            w.push(cons[rng.random_range(0..cons.len())]);
        }
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn make_dictionary(
    rng: &mut ChaCha8Rng,
    taken: &mut HashSet<String>,
    flavour: usize,
    n_pivot: usize,
    noise: &DictionaryNoise,
) -> Dictionary {
    let mut other_words = word_factory(rng, taken, flavour, n_pivot);
    let mut translations: Vec<Vec<u32>> = (0..n_pivot as u32).map(|i| vec![i]).collect();
    for i in 0..n_pivot {
        if rng.random_bool(noise.merge_rate) {
            let j = rng.random_range(0..n_pivot);
            translations[i] = vec![j as u32];
        }
    }
    for t in translations.iter_mut() {
        if rng.random_bool(noise.synonym_rate) {
            let fresh = word_factory(rng, taken, flavour, 1).pop().expect("one word");
            t.push(other_words.len() as u32);
            other_words.push(fresh);
        }
    }
    Dictionary {
        translations,
        other_words,
    }
}

// Table rows: true images share most of the mass, distractors the rest. A
// wrong row gives one distractor more mass than any true image.
fn make_row(
    rng: &mut ChaCha8Rng,
    truth: &[u32],
    n_targets: usize,
    noise: &DictionaryNoise,
) -> Vec<(u32, f64)> {
    let mut row: Vec<(u32, f64)> = Vec::new();
    let true_mass = rng.random_range(0.55..0.9);
    for &t in truth {
        row.push((t, true_mass / truth.len() as f64));
    }
    let mut distractors: Vec<u32> = Vec::new();
    while distractors.len() < noise.distractors.min(n_targets.saturating_sub(truth.len())) {
        let d = rng.random_range(0..n_targets) as u32;
        if !truth.contains(&d) && !distractors.contains(&d) {
            distractors.push(d);
        }
    }
    let rest = 1.0 - true_mass;
    let wrong = !distractors.is_empty() && rng.random_bool(noise.wrong_rate);
    let weights: Vec<f64> = distractors.iter().map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for (k, (&d, w)) in distractors.iter().zip(&weights).enumerate() {
        let p = if wrong && k == 0 {
            (true_mass / truth.len() as f64 + 0.05).min(0.95)
        } else {
            rest * w / total
        };
        row.push((d, p));
    }
    if wrong {
        let sum: f64 = row.iter().map(|e| e.1).sum();
        for e in &mut row {
            e.1 /= sum;
        }
    }
    row
}

fn tables(
    rng: &mut ChaCha8Rng,
    pivot_lang: &str,
    lang: &str,
    pivot_words: &[String],
    dict: &Dictionary,
    noise: &DictionaryNoise,
) -> (TranslationTable, TranslationTable) {
    let mut fwd = TranslationTable::new(pivot_lang, lang).expect("valid tags");
    let mut bwd = TranslationTable::new(lang, pivot_lang).expect("valid tags");
    let mut preimages: Vec<Vec<u32>> = vec![Vec::new(); dict.other_words.len()];
    for (i, ts) in dict.translations.iter().enumerate() {
        for &t in ts {
            preimages[t as usize].push(i as u32);
        }
        for (t, p) in make_row(rng, ts, dict.other_words.len(), noise) {
            fwd.insert(&pivot_words[i], &dict.other_words[t as usize], p);
        }
    }
    for (t, pre) in preimages.iter().enumerate() {
        if pre.is_empty() {
            continue;
        }
        for (i, p) in make_row(rng, pre, pivot_words.len(), noise) {
            bwd.insert(&dict.other_words[t], &pivot_words[i as usize], p);
        }
    }
    (fwd, bwd)
}

struct WordSampler {
    background: Option<(Zipf<f64>, f64)>,
    main: Zipf<f64>,
    topics: Option<(usize, usize, usize)>,
}

impl WordSampler {
    fn new(cfg: &SyntheticConfig) -> Self {
        let zipf = |n: usize| Zipf::new(n as f64, cfg.zipf_exponent).expect("valid Zipf parameters");
        match &cfg.topics {
            None => WordSampler {
                background: None,
                main: zipf(cfg.vocab_size),
                topics: None,
            },
            Some(t) => WordSampler {
                background: Some((zipf(t.background_words), t.background_share)),
                main: zipf(t.words_per_topic),
                topics: Some((t.count, t.words_per_topic, t.background_words)),
            },
        }
    }

    fn n_words(&self, cfg: &SyntheticConfig) -> usize {
        match &cfg.topics {
            None => cfg.vocab_size,
            Some(t) => t.background_words + t.count * t.words_per_topic,
        }
    }

    fn document(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<u32> {
        let topic = self.topics.map(|(count, _, _)| rng.random_range(0..count));
        // a per-document permutation offset keeps topic documents distinct
        let shift = rng.random_range(0..self.topics.map_or(1, |t| t.1));
        (0..len)
            .map(|_| match (self.topics, &self.background, topic) {
                (Some((_, per, bg)), Some((bz, share)), Some(topic)) => {
                    if rng.random_bool(*share) {
                        bz.sample(rng) as u32 - 1
                    } else {
                        let r = (self.main.sample(rng) as usize - 1 + shift) % per;
                        (bg + topic * per + r) as u32
                    }
                }
                _ => self.main.sample(rng) as u32 - 1,
            })
            .collect()
    }
}

fn hex_id(rng: &mut ChaCha8Rng) -> String {
    format!("{:012x}", rng.random::<u64>() & 0xffff_ffff_ffff)
}

/// Generates a corpus; equal configurations give identical corpora.
pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampler = WordSampler::new(cfg);
    let n_words = sampler.n_words(cfg);
    let mut taken = HashSet::new();
    let pivot_words = word_factory(&mut rng, &mut taken, 0, n_words);

    let mut dicts = Vec::new();
    let mut table_map = BTreeMap::new();
    for (k, lang) in cfg.other_langs.iter().enumerate() {
        let dict = make_dictionary(&mut rng, &mut taken, k + 1, n_words, &cfg.dictionary);
        let t = tables(&mut rng, &cfg.pivot_lang, lang, &pivot_words, &dict, &cfg.dictionary);
        table_map.insert(lang.clone(), t);
        dicts.push(dict);
    }

    let mut records = Vec::new();
    let mut gold = Vec::new();
    for d in 0..cfg.domains {
        let host = format!("site{d:03}.example.com");
        for j in 0..cfg.pivot_docs_per_domain {
            let len = rng.random_range(cfg.doc_len.0..=cfg.doc_len.1);
            let ids = sampler.document(&mut rng, len);
            let page = format!("page-{j:05}.html");
            let pivot_url = match cfg.url_style {
                UrlStyle::Opaque => format!("http://{host}/{}.html", hex_id(&mut rng)),
                _ => format!("http://{host}/{page}"),
            };
            let tokens: Vec<String> = ids.iter().map(|&i| pivot_words[i as usize].clone()).collect();
            records.push(record(&pivot_url, &host, &cfg.pivot_lang, tokens));

            for (lang, dict) in cfg.other_langs.iter().zip(&dicts) {
                let mut tokens = Vec::with_capacity(ids.len());
                for &i in &ids {
                    if rng.random_bool(cfg.dropout) {
                        continue;
                    }
                    let ts = &dict.translations[i as usize];
                    let t = ts[rng.random_range(0..ts.len())];
                    tokens.push(dict.other_words[t as usize].clone());
                }
                let other_url = match &cfg.url_style {
                    UrlStyle::Parallel => format!("http://{host}/{lang}/{page}"),
                    UrlStyle::Opaque => format!("http://{host}/{}.html", hex_id(&mut rng)),
                    UrlStyle::FakeIdentifier(tok) => format!("http://{host}/{tok}/{page}"),
                };
                records.push(record(&other_url, &host, lang, tokens));
                gold.push(GoldPair {
                    pivot_url: pivot_url.clone(),
                    other_url,
                    other_lang: lang.clone(),
                });
            }
        }
    }
    gold.sort();
    SyntheticCorpus {
        pivot_lang: cfg.pivot_lang.clone(),
        records,
        tables: table_map,
        gold,
    }
}

fn record(url: &str, host: &str, lang: &str, tokens: Vec<String>) -> DocumentRecord {
    let raw_length = tokens.iter().map(|t| t.chars().count() + 1).sum::<usize>().saturating_sub(1);
    DocumentRecord {
        url: url.to_string(),
        domain: host.to_string(),
        lang: lang.to_string(),
        tokens,
        raw_length,
    }
}

impl SyntheticCorpus {
    pub fn partitions(&self) -> BTreeMap<String, CorpusPartition> {
        group_by_domain(self.records.iter().cloned())
    }

    /// Input records as JSON lines with `url`, `lang` and `text`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            let line = serde_json::json!({
                "url": r.url,
                "lang": r.lang,
                "text": r.tokens.join(" "),
            });
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Sorted `src \t tgt \t prob` lines of one table.
    pub fn write_table<W: Write>(table: &TranslationTable, mut w: W) -> std::io::Result<()> {
        let mut rows: Vec<(&String, &String, f64)> = table
            .probs
            .iter()
            .flat_map(|(s, row)| row.iter().map(move |(t, p)| (s, t, *p)))
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (s, t, p) in rows {
            writeln!(w, "{s}\t{t}\t{p}")?;
        }
        Ok(())
    }

    /// `pivot_url \t other_url \t other_lang` lines.
    pub fn write_gold<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for g in &self.gold {
            writeln!(w, "{}\t{}\t{}", g.pivot_url, g.other_url, g.other_lang)?;
        }
        Ok(())
    }

    pub fn gold_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.gold
            .iter()
            .map(|g| (g.pivot_url.as_str(), g.other_url.as_str(), g.other_lang.as_str()))
    }
}

/// Shuffles in place with the given seed.
pub fn shuffled<T>(mut items: Vec<T>, seed: u64) -> Vec<T> {
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    items
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            domains: 2,
            pivot_docs_per_domain: 5,
            vocab_size: 200,
            doc_len: (20, 40),
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small());
        let b = generate(&small());
        assert_eq!(a.records, b.records);
        assert_eq!(a.gold, b.gold);
        let c = generate(&SyntheticConfig { seed: 1, ..small() });
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn shape_and_gold() {
        let c = generate(&small());
        assert_eq!(c.records.len(), 20);
        assert_eq!(c.gold.len(), 10);
        let parts = c.partitions();
        assert_eq!(parts.len(), 2);
        for p in parts.values() {
            assert_eq!(p.docs("en").len(), 5);
            assert_eq!(p.docs("fr").len(), 5);
        }
    }

    #[test]
    fn bijective_tables_point_at_translations() {
        let c = generate(&SyntheticConfig { dropout: 0.0, ..small() });
        let (fwd, bwd) = &c.tables["fr"];
        for row in fwd.probs.values().chain(bwd.probs.values()) {
            let sum: f64 = row.values().sum();
            assert!(sum <= 1.0 + 1e-9);
        }
        assert!(fwd.overfull_rows(1e-6).is_empty());
        // every pivot token's best translation occurs in the counterpart
        let parts = c.partitions();
        let p = parts.values().next().unwrap();
        let en = &p.docs("en")[0];
        let g = c.gold.iter().find(|g| g.pivot_url == en.url).unwrap();
        let fr = p.docs("fr").iter().find(|d| d.url == g.other_url).unwrap();
        for t in &en.tokens {
            let best = fwd.row(t).unwrap().iter().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!(fr.tokens.contains(best));
        }
    }

    #[test]
    fn jsonl_text_tokenizes_back() {
        let c = generate(&small());
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let first = buf.split(|&b| b == b'\n').next().unwrap();
        let r = crate::corpus::parse_record(first, crate::corpus::RecordFormat::JsonLines).unwrap();
        assert_eq!(r.tokens, c.records[0].tokens);
        assert_eq!(r.raw_length, c.records[0].raw_length);
    }

    #[test]
    fn topic_documents_stay_in_their_block() {
        let cfg = SyntheticConfig {
            topics: Some(Topics {
                count: 10,
                words_per_topic: 20,
                background_words: 30,
                background_share: 0.5,
            }),
            ..small()
        };
        let c = generate(&cfg);
        assert_eq!(c.tables["fr"].0.probs.len(), 230);
    }
}

//! Content-based document alignment: dot-product scoring through an
//! inverted index and one-to-one matching per (domain, language).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusPartition;
use crate::error::{Error, Result};
use crate::fmt::{escape_tsv, unescape_tsv};
use crate::vectorspace::{SparseVector, VectorIndex};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cda,
    Url,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cda => "cda",
            Method::Url => "url",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cda" => Ok(Method::Cda),
            "url" => Ok(Method::Url),
            _ => Err(Error::Usage(format!("unknown method `{s}`"))),
        }
    }
}

/// One aligned document pair. Both URLs belong to `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPair {
    pub domain: String,
    pub pivot_url: String,
    pub other_url: String,
    pub other_lang: String,
    pub score: f64,
    pub method: Method,
}

/// How a score matrix is reduced to a one-to-one alignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matching {
    /// Competitive linking over all entries.
    #[default]
    #[serde(rename = "greedy")]
    Greedy,
    /// Each pivot document's best entry, then competitive linking over those.
    #[serde(rename = "top1-then-greedy")]
    Top1ThenGreedy,
}

impl Matching {
    pub const ALL: [Matching; 2] = [Matching::Greedy, Matching::Top1ThenGreedy];

    pub fn as_str(self) -> &'static str {
        match self {
            Matching::Greedy => "greedy",
            Matching::Top1ThenGreedy => "top1-then-greedy",
        }
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Matching {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Matching::Greedy),
            "top1-then-greedy" => Ok(Matching::Top1ThenGreedy),
            _ => Err(Error::Usage(format!(
                "unknown matching `{s}`; expected greedy or top1-then-greedy"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreEntry {
    pub row: u32,
    pub col: u32,
    pub score: f64,
}

/// Retained scores of one domain's pivot × other documents. Absent entries
/// are 0; stored ones are positive and at least the threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMatrix {
    pub domain: String,
    pub other_lang: String,
    /// Pivot document URLs.
    pub rows: Vec<String>,
    /// Other-language document URLs.
    pub cols: Vec<String>,
    /// Sorted by (row, col).
    pub entries: Vec<ScoreEntry>,
    /// Pairs sharing at least one dimension, i.e. the pairs actually scored.
    pub candidates_scored: u64,
}

/// Dot product of two normalized vectors, clamped to [0, 1].
pub fn score_pair(v1: &SparseVector, v2: &SparseVector) -> f64 {
    let (a, b) = (&v1.entries, &v2.entries);
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                sum += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Scores every pivot/other pair that shares a dimension and keeps those
/// with score ≥ `threshold`. Sums accumulate in ascending dimension order,
/// so each stored score equals [`score_pair`] exactly.
pub fn score_vectors(
    domain: &str,
    other_lang: &str,
    pivot: &[&SparseVector],
    other: &[&SparseVector],
    threshold: f64,
) -> ScoreMatrix {
    let dims = other
        .iter()
        .filter_map(|v| v.entries.last())
        .map(|e| e.0 as usize + 1)
        .max()
        .unwrap_or(0);
    let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dims];
    for (col, v) in other.iter().enumerate() {
        for &(d, w) in &v.entries {
            postings[d as usize].push((col as u32, w));
        }
    }

    let per_row: Vec<(Vec<ScoreEntry>, u64)> = pivot
        .par_iter()
        .enumerate()
        .map_init(
            || (vec![0.0f64; other.len()], Vec::<u32>::new()),
            |(acc, touched), (row, v)| {
                for &(d, w) in &v.entries {
                    let Some(list) = postings.get(d as usize) else { continue };
                    for &(col, w2) in list {
                        let slot = &mut acc[col as usize];
                        if *slot == 0.0 {
                            touched.push(col);
                        }
                        *slot += w * w2;
                    }
                }
                touched.sort_unstable();
                let scored = touched.len() as u64;
                let mut kept = Vec::new();
                for &col in touched.iter() {
                    let score = acc[col as usize].clamp(0.0, 1.0);
                    acc[col as usize] = 0.0;
                    if score > 0.0 && score >= threshold {
                        kept.push(ScoreEntry {
                            row: row as u32,
                            col,
                            score,
                        });
                    }
                }
                touched.clear();
                (kept, scored)
            },
        )
        .collect();

    let mut m = ScoreMatrix {
        domain: domain.to_string(),
        other_lang: other_lang.to_string(),
        rows: pivot.iter().map(|v| v.doc_url.clone()).collect(),
        cols: other.iter().map(|v| v.doc_url.clone()).collect(),
        ..Default::default()
    };
    for (kept, scored) in per_row {
        m.entries.extend(kept);
        m.candidates_scored += scored;
    }
    m
}

/// Score matrix of one domain between the pivot language and `other_lang`.
/// Documents without a vector count as empty.
pub fn score_domain(
    partition: &CorpusPartition,
    vectors: &VectorIndex,
    pivot_lang: &str,
    other_lang: &str,
    threshold: f64,
) -> ScoreMatrix {
    let empty = BTreeMap::new();
    let lookup = |lang: &str| -> Vec<SparseVector> {
        let vs = vectors.get(lang).unwrap_or(&empty);
        partition
            .docs(lang)
            .iter()
            .map(|d| match vs.get(&d.url) {
                Some(v) => v.clone(),
                None => {
                    log::warn!("no vector for {} ({lang})", d.url);
                    SparseVector {
                        doc_url: d.url.clone(),
                        entries: Vec::new(),
                        norm_applied: true,
                    }
                }
            })
            .collect()
    };
    let pivot = lookup(pivot_lang);
    let other = lookup(other_lang);
    score_vectors(
        &partition.domain,
        other_lang,
        &pivot.iter().collect::<Vec<_>>(),
        &other.iter().collect::<Vec<_>>(),
        threshold,
    )
}

fn by_rank(m: &ScoreMatrix) -> impl Fn(&ScoreEntry, &ScoreEntry) -> Ordering + '_ {
    |a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| m.rows[a.row as usize].cmp(&m.rows[b.row as usize]))
            .then_with(|| m.cols[a.col as usize].cmp(&m.cols[b.col as usize]))
    }
}

/// One-to-one alignment from a score matrix, in descending score order.
///
/// Greedy competitive linking visits entries by descending score, ties by
/// (pivot URL, other URL), and accepts an entry when neither document is
/// taken yet.
pub fn match_one_to_one(m: &ScoreMatrix, mode: Matching) -> Vec<AlignmentPair> {
    let rank = by_rank(m);
    let mut candidates: Vec<ScoreEntry> = match mode {
        Matching::Greedy => m.entries.clone(),
        Matching::Top1ThenGreedy => {
            let mut best: BTreeMap<u32, ScoreEntry> = BTreeMap::new();
            for e in &m.entries {
                match best.get(&e.row) {
                    Some(b) if rank(b, e) != Ordering::Greater => {}
                    _ => {
                        best.insert(e.row, *e);
                    }
                }
            }
            best.into_values().collect()
        }
    };
    candidates.sort_by(&rank);

    let mut row_used = vec![false; m.rows.len()];
    let mut col_used = vec![false; m.cols.len()];
    let mut out = Vec::new();
    for e in candidates {
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

/// Work counters of one [`align_corpus`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AlignStats {
    pub matrices: usize,
    /// Pairs sharing at least one dimension.
    pub candidates_scored: u64,
    /// Sum over matrices of |pivot| × |other|.
    pub full_product: u64,
    pub pairs: usize,
}

/// Runs scoring and matching for every domain and every language in
/// `langs`. Each (domain, language) matching is independent. Output is in
/// domain order, then language order, then descending score.
pub fn align_corpus(
    parts: &BTreeMap<String, CorpusPartition>,
    vectors: &VectorIndex,
    pivot_lang: &str,
    langs: &[String],
    threshold: f64,
    mode: Matching,
) -> Result<(Vec<AlignmentPair>, AlignStats)> {
    let mut results = align_corpus_modes(parts, vectors, pivot_lang, langs, threshold, &[mode])?;
    Ok(results.pop().expect("one mode requested"))
}

/// As [`align_corpus`], scoring once and matching under several modes.
pub fn align_corpus_modes(
    parts: &BTreeMap<String, CorpusPartition>,
    vectors: &VectorIndex,
    pivot_lang: &str,
    langs: &[String],
    threshold: f64,
    modes: &[Matching],
) -> Result<Vec<(Vec<AlignmentPair>, AlignStats)>> {
    for lang in std::iter::once(pivot_lang).chain(langs.iter().map(String::as_str)) {
        if !vectors.contains_key(lang) {
            return Err(Error::Config(format!("no document vectors for language `{lang}`")));
        }
    }
    let mut langs: Vec<&str> = langs.iter().map(String::as_str).filter(|l| *l != pivot_lang).collect();
    langs.sort_unstable();
    langs.dedup();
    let tasks: Vec<(&CorpusPartition, &str)> = parts
        .values()
        .flat_map(|p| langs.iter().map(move |l| (p, *l)))
        .filter(|(p, l)| !p.docs(pivot_lang).is_empty() && !p.docs(l).is_empty())
        .collect();
    let per_task: Vec<(Vec<Vec<AlignmentPair>>, u64, u64)> = tasks
        .par_iter()
        .map(|(p, lang)| {
            let m = score_domain(p, vectors, pivot_lang, lang, threshold);
            let full = m.rows.len() as u64 * m.cols.len() as u64;
            let matched = modes.iter().map(|&mode| match_one_to_one(&m, mode)).collect();
            (matched, m.candidates_scored, full)
        })
        .collect();

    let mut out: Vec<(Vec<AlignmentPair>, AlignStats)> = modes
        .iter()
        .map(|_| (Vec::new(), AlignStats::default()))
        .collect();
    for (matched, scored, full) in per_task {
        for ((pairs, stats), m) in out.iter_mut().zip(matched) {
            stats.matrices += 1;
            stats.candidates_scored += scored;
            stats.full_product += full;
            stats.pairs += m.len();
            pairs.extend(m);
        }
    }
    Ok(out)
}

/// `domain \t pivot_url \t other_url \t other_lang \t score \t method`,
/// score at 6 decimals.
pub fn write_pairs<'a, W: Write>(
    mut w: W,
    pairs: impl IntoIterator<Item = &'a AlignmentPair>,
) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.6}\t{}",
            escape_tsv(&p.domain),
            escape_tsv(&p.pivot_url),
            escape_tsv(&p.other_url),
            p.other_lang,
            p.score,
            p.method
        )?;
    }
    Ok(())
}

/// Reads the format of [`write_pairs`].
pub fn read_pairs<R: BufRead>(reader: R, source: &str) -> Result<Vec<AlignmentPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Format {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [domain, pivot, other, lang, score, method] = fields[..] else {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        };
        let score: f64 = score.parse().map_err(|_| bad(format!("bad score `{score}`")))?;
        let method: Method = method.parse().map_err(|_| bad(format!("bad method `{method}`")))?;
        out.push(AlignmentPair {
            domain: unescape_tsv(domain).into_owned(),
            pivot_url: unescape_tsv(pivot).into_owned(),
            other_url: unescape_tsv(other).into_owned(),
            other_lang: lang.to_string(),
            score,
            method,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(url: &str, entries: &[(u32, f64)]) -> SparseVector {
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        SparseVector {
            doc_url: url.into(),
            entries: entries.iter().map(|&(d, w)| (d, w / norm)).collect(),
            norm_applied: true,
        }
    }

    fn matrix(rows: &[&str], cols: &[&str], scores: &[(usize, usize, f64)]) -> ScoreMatrix {
        ScoreMatrix {
            domain: "d".into(),
            other_lang: "fr".into(),
            rows: rows.iter().map(|s| s.to_string()).collect(),
            cols: cols.iter().map(|s| s.to_string()).collect(),
            entries: scores
                .iter()
                .map(|&(r, c, s)| ScoreEntry { row: r as u32, col: c as u32, score: s })
                .collect(),
            candidates_scored: 0,
        }
    }

    fn triples(pairs: &[AlignmentPair]) -> Vec<(&str, &str, f64)> {
        pairs
            .iter()
            .map(|p| (p.pivot_url.as_str(), p.other_url.as_str(), p.score))
            .collect()
    }

    #[test]
    fn pair_scores() {
        let a = sv("a", &[(0, 1.0), (1, 1.0)]);
        assert!((score_pair(&a, &a) - 1.0).abs() < 1e-9);
        assert_eq!(score_pair(&a, &sv("b", &[(2, 1.0)])), 0.0);
        let c = score_pair(&a, &sv("c", &[(0, 1.0)]));
        assert!((c - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn greedy_trace() {
        let m = matrix(&["e1", "e2"], &["f1", "f2"], &[(0, 0, 0.9), (0, 1, 0.8), (1, 1, 0.7)]);
        let out = match_one_to_one(&m, Matching::Greedy);
        assert_eq!(triples(&out), [("e1", "f1", 0.9), ("e2", "f2", 0.7)]);
        assert!(out.iter().all(|p| p.method == Method::Cda));
    }

    #[test]
    fn tie_goes_to_smaller_pivot() {
        let m = matrix(&["e2", "e1"], &["f1"], &[(0, 0, 0.5), (1, 0, 0.5)]);
        assert_eq!(triples(&match_one_to_one(&m, Matching::Greedy)), [("e1", "f1", 0.5)]);
        assert!(match_one_to_one(&matrix(&[], &[], &[]), Matching::Greedy).is_empty());
    }

    #[test]
    fn top1_then_greedy_differs_on_conflict() {
        // e1 and e2 both prefer f1; greedy gives e2 its second choice.
        let m = matrix(
            &["e1", "e2"],
            &["f1", "f2"],
            &[(0, 0, 0.9), (1, 0, 0.8), (1, 1, 0.7)],
        );
        assert_eq!(match_one_to_one(&m, Matching::Greedy).len(), 2);
        let t = match_one_to_one(&m, Matching::Top1ThenGreedy);
        assert_eq!(triples(&t), [("e1", "f1", 0.9)]);
    }

    #[test]
    fn matrix_threshold_and_counter() {
        let p = [sv("p1", &[(0, 1.0), (1, 1.0)]), sv("p2", &[(5, 1.0)])];
        let o = [sv("o1", &[(0, 1.0)]), sv("o2", &[(1, 1.0), (2, 3.0)]), sv("o3", &[(9, 1.0)])];
        let pr: Vec<&SparseVector> = p.iter().collect();
        let or: Vec<&SparseVector> = o.iter().collect();
        let m = score_vectors("d", "fr", &pr, &or, 0.0);
        assert_eq!(m.candidates_scored, 2);
        assert_eq!(m.entries.len(), 2);
        for e in &m.entries {
            assert_eq!(e.score, score_pair(&p[e.row as usize], &o[e.col as usize]));
        }
        assert!(score_vectors("d", "fr", &pr, &or, 1.0 + 1e-9).entries.is_empty());
        assert!(score_vectors("d", "fr", &pr, &[], 0.1).entries.is_empty());
    }

    #[test]
    fn missing_language_vectors_is_config_error() {
        let parts = BTreeMap::new();
        let vectors = VectorIndex::from([("en".to_string(), BTreeMap::new())]);
        let err = align_corpus(&parts, &vectors, "en", &["fr".into()], 0.1, Matching::Greedy).unwrap_err();
        assert!(err.to_string().contains("fr"));
    }

    #[test]
    fn pairs_tsv_round_trip() {
        let p = AlignmentPair {
            domain: "a.com".into(),
            pivot_url: "http://a.com/1".into(),
            other_url: "http://a.com/fr/1".into(),
            other_lang: "fr".into(),
            score: 0.12345678,
            method: Method::Cda,
        };
        let mut buf = Vec::new();
        write_pairs(&mut buf, [&p]).unwrap();
        assert_eq!(
            String::from_utf8_lossy(&buf),
            "a.com\thttp://a.com/1\thttp://a.com/fr/1\tfr\t0.123457\tcda\n"
        );
        let back = read_pairs(buf.as_slice(), "p").unwrap();
        assert_eq!(back[0].score, 0.123457);
        assert_eq!(back[0].other_url, p.other_url);
    }

    // Brute force: explicit sort of all entries, then a linear scan with
    // linear-time membership checks.
    fn oracle(m: &ScoreMatrix) -> Vec<(String, String, f64)> {
        let mut all: Vec<(f64, String, String)> = m
            .entries
            .iter()
            .map(|e| (e.score, m.rows[e.row as usize].clone(), m.cols[e.col as usize].clone()))
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut out: Vec<(String, String, f64)> = Vec::new();
        for (s, r, c) in all {
            if out.iter().any(|(r2, c2, _)| *r2 == r || *c2 == c) {
                continue;
            }
            out.push((r, c, s));
        }
        out
    }

    proptest! {
        #[test]
        fn greedy_equals_oracle(
            n in 0usize..12, k in 0usize..12,
            cells in prop::collection::vec((0usize..12, 0usize..12, 1u8..6), 0..60),
        ) {
            let rows: Vec<String> = (0..n).map(|i| format!("e{i:02}")).collect();
            let cols: Vec<String> = (0..k).map(|i| format!("f{i:02}")).collect();
            let mut seen = std::collections::BTreeMap::new();
            for (r, c, s) in cells {
                if r < n && c < k {
                    seen.insert((r, c), s as f64 / 5.0);
                }
            }
            let m = ScoreMatrix {
                domain: "d".into(),
                other_lang: "fr".into(),
                rows,
                cols,
                entries: seen.into_iter().map(|((r, c), s)| ScoreEntry { row: r as u32, col: c as u32, score: s }).collect(),
                candidates_scored: 0,
            };
            let got: Vec<(String, String, f64)> = match_one_to_one(&m, Matching::Greedy)
                .into_iter()
                .map(|p| (p.pivot_url, p.other_url, p.score))
                .collect();
            prop_assert_eq!(got, oracle(&m));
        }

        #[test]
        fn inverted_index_matches_pairwise(
            p in prop::collection::vec(prop::collection::btree_map(0u32..20, 1u8..9, 0..6), 0..8),
            o in prop::collection::vec(prop::collection::btree_map(0u32..20, 1u8..9, 0..6), 0..8),
            t in 0.0f64..0.8,
        ) {
            let mk = |i: usize, m: &std::collections::BTreeMap<u32, u8>| {
                if m.is_empty() {
                    SparseVector { doc_url: format!("u{i}"), entries: vec![], norm_applied: true }
                } else {
                    sv(&format!("u{i}"), &m.iter().map(|(&d, &w)| (d, w as f64)).collect::<Vec<_>>())
                }
            };
            let pv: Vec<SparseVector> = p.iter().enumerate().map(|(i, m)| mk(i, m)).collect();
            let ov: Vec<SparseVector> = o.iter().enumerate().map(|(i, m)| mk(i, m)).collect();
            let m = score_vectors("d", "fr", &pv.iter().collect::<Vec<_>>(), &ov.iter().collect::<Vec<_>>(), t);
            let mut expected = Vec::new();
            let mut shared = 0;
            for (r, a) in pv.iter().enumerate() {
                for (c, b) in ov.iter().enumerate() {
                    if a.entries.iter().any(|x| b.entries.iter().any(|y| y.0 == x.0)) {
                        shared += 1;
                    }
                    let s = score_pair(a, b);
                    if s > 0.0 && s >= t {
                        expected.push(ScoreEntry { row: r as u32, col: c as u32, score: s });
                    }
                }
            }
            prop_assert_eq!(m.entries, expected);
            prop_assert_eq!(m.candidates_scored, shared);
            // higher threshold keeps a subset of entries
            let hi = score_vectors("d", "fr", &pv.iter().collect::<Vec<_>>(), &ov.iter().collect::<Vec<_>>(), t + 0.1);
            let lo = score_vectors("d", "fr", &pv.iter().collect::<Vec<_>>(), &ov.iter().collect::<Vec<_>>(), t);
            for e in &hi.entries {
                prop_assert!(lo.entries.contains(e));
            }
        }
    }
}

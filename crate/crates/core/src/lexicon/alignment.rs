use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::TranslationTable;
use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};

/// The alignment set between a pivot vocabulary and another vocabulary.
///
/// `pairs` holds every `(a, b)` such that `b` maximizes
/// `s(a, w) = P_fwd(w | a) + P_bwd(a | w)` over the other vocabulary, with
/// the maximum strictly positive. `to_pivot` keeps one pivot word per other
/// word: the highest `s`, ties to the lexicographically smaller pivot word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconAlignment {
    pub pivot_lang: String,
    pub other_lang: String,
    pub pairs: BTreeSet<(String, String)>,
    pub to_pivot: BTreeMap<String, (String, f64)>,
    /// Pairs `(a, b)` for which `a` does not also maximize `s(·, b)` over the
    /// pivot vocabulary.
    pub reverse_violations: usize,
}

/// Builds the alignment set from a pivot→other table and an other→pivot
/// table over the given vocabularies. Missing entries read as 0.
pub fn build_alignment(
    fwd: &TranslationTable,
    bwd: &TranslationTable,
    v_alpha: &[String],
    v_beta: &[String],
) -> Result<LexiconAlignment> {
    if v_alpha.is_empty() || v_beta.is_empty() {
        return Err(Error::Config(
            "lexicon alignment needs non-empty vocabularies".into(),
        ));
    }
    if fwd.src_lang != bwd.tgt_lang || fwd.tgt_lang != bwd.src_lang {
        return Err(Error::Config(format!(
            "translation tables are not mutually inverse: {}→{} and {}→{}",
            fwd.src_lang, fwd.tgt_lang, bwd.src_lang, bwd.tgt_lang
        )));
    }
    let alpha: BTreeSet<&str> = v_alpha.iter().map(String::as_str).collect();
    let beta: HashSet<&str> = v_beta.iter().map(String::as_str).collect();

    // P_bwd(a | w) indexed by a; P_fwd(w | a) indexed by w.
    let bwd_by_pivot = invert(bwd, &beta, &alpha.iter().copied().collect());
    let fwd_by_other = invert(fwd, &alpha.iter().copied().collect(), &beta);

    let alpha: Vec<&str> = alpha.into_iter().collect();
    let best: Vec<(&str, Vec<&str>, f64)> = alpha
        .par_iter()
        .filter_map(|&a| {
            let mut s: HashMap<&str, f64> = HashMap::new();
            if let Some(row) = fwd.row(a) {
                for (w, &p) in row {
                    if let Some(&w) = beta.get(w.as_str()) {
                        *s.entry(w).or_insert(0.0) += p;
                    }
                }
            }
            for &(w, p) in bwd_by_pivot.get(a).map(Vec::as_slice).unwrap_or(&[]) {
                *s.entry(w).or_insert(0.0) += p;
            }
            let max = s.values().copied().fold(0.0f64, f64::max);
            if max <= 0.0 {
                return None;
            }
            let mut argmax: Vec<&str> = s
                .into_iter()
                .filter(|&(_, v)| v == max)
                .map(|(w, _)| w)
                .collect();
            argmax.sort_unstable();
            Some((a, argmax, max))
        })
        .collect();

    let mut pairs = BTreeSet::new();
    let mut to_pivot: BTreeMap<String, (String, f64)> = BTreeMap::new();
    for (a, bs, score) in &best {
        for &b in bs {
            pairs.insert((a.to_string(), b.to_string()));
            // `best` is in ascending pivot order, so strict > keeps the
            // smaller pivot word on ties.
            match to_pivot.get(b) {
                Some((_, s)) if *s >= *score => {}
                _ => {
                    to_pivot.insert(b.to_string(), (a.to_string(), *score));
                }
            }
        }
    }

    let reverse_violations = best
        .iter()
        .flat_map(|(a, bs, score)| bs.iter().map(move |b| (*a, *b, *score)))
        .filter(|&(_, b, score)| {
            let mut s: HashMap<&str, f64> = HashMap::new();
            if let Some(row) = bwd.row(b) {
                for (w, &p) in row {
                    if let Some(&w) = alpha.binary_search(&w.as_str()).ok().map(|i| &alpha[i]) {
                        *s.entry(w).or_insert(0.0) += p;
                    }
                }
            }
            for &(w, p) in fwd_by_other.get(b).map(Vec::as_slice).unwrap_or(&[]) {
                *s.entry(w).or_insert(0.0) += p;
            }
            s.values().any(|&v| v > score)
        })
        .count();

    Ok(LexiconAlignment {
        pivot_lang: fwd.src_lang.clone(),
        other_lang: fwd.tgt_lang.clone(),
        pairs,
        to_pivot,
        reverse_violations,
    })
}

// target word → [(source word, p)] restricted to the given vocabularies.
fn invert<'t>(
    table: &'t TranslationTable,
    src_vocab: &HashSet<&str>,
    tgt_vocab: &HashSet<&str>,
) -> HashMap<&'t str, Vec<(&'t str, f64)>> {
    let mut out: HashMap<&str, Vec<(&str, f64)>> = HashMap::new();
    for (src, row) in &table.probs {
        if !src_vocab.contains(src.as_str()) {
            continue;
        }
        for (tgt, &p) in row {
            if p > 0.0 && tgt_vocab.contains(tgt.as_str()) {
                out.entry(tgt.as_str()).or_default().push((src.as_str(), p));
            }
        }
    }
    out
}

impl LexiconAlignment {
    /// Alignment of a language with itself over `words`. Every score is 2, as
    /// if both directions gave probability 1.
    pub fn identity(lang: &str, words: &[String]) -> Self {
        let pairs = words.iter().map(|w| (w.clone(), w.clone())).collect();
        let to_pivot = words.iter().map(|w| (w.clone(), (w.clone(), 2.0))).collect();
        LexiconAlignment {
            pivot_lang: lang.to_string(),
            other_lang: lang.to_string(),
            pairs,
            to_pivot,
            reverse_violations: 0,
        }
    }

    pub fn pivot_of(&self, other_word: &str) -> Option<&str> {
        self.to_pivot.get(other_word).map(|(a, _)| a.as_str())
    }

    /// Substitutes every covered token by its pivot word and drops the rest.
    pub fn map_tokens(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .filter_map(|t| self.pivot_of(t).map(str::to_string))
            .collect()
    }

    /// Maps a document written in `other_lang` into the pivot lexicon.
    pub fn map_document(&self, doc: &DocumentRecord) -> Result<Vec<String>> {
        if doc.lang != self.other_lang {
            return Err(Error::Usage(format!(
                "document {} is `{}` but the alignment maps `{}`",
                doc.url, doc.lang, self.other_lang
            )));
        }
        Ok(self.map_tokens(&doc.tokens))
    }

    /// Writes `other \t pivot \t score` lines sorted by the other word.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (b, (a, s)) in &self.to_pivot {
            writeln!(w, "{b}\t{a}\t{s}")?;
        }
        Ok(())
    }

    /// Reads the format of [`write_tsv`](Self::write_tsv). Only `to_pivot`
    /// is serialized, so `pairs` is rebuilt from it.
    pub fn read_tsv<R: BufRead>(
        reader: R,
        source: &str,
        pivot_lang: &str,
        other_lang: &str,
    ) -> Result<Self> {
        let mut out = LexiconAlignment {
            pivot_lang: pivot_lang.to_string(),
            other_lang: other_lang.to_string(),
            ..Default::default()
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = match fields[..] {
                [b, a, s] => s.parse::<f64>().ok().map(|s| (b, a, s)),
                _ => None,
            };
            let Some((b, a, s)) = parsed else {
                return Err(Error::Format {
                    path: source.to_string(),
                    line: i + 1,
                    message: "expected `other \\t pivot \\t score`".into(),
                });
            };
            out.pairs.insert((a.to_string(), b.to_string()));
            out.to_pivot.insert(b.to_string(), (a.to_string(), s));
        }
        Ok(out)
    }
}

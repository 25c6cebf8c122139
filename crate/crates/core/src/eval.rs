//! Recall of predicted document pairs against a one-to-one gold alignment.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::Serialize;

use crate::cda::AlignmentPair;
use crate::corpus::{domain_of, DomainMode};
use crate::error::{Error, Result};

/// Gold pairs with lowercased URLs. No URL occurs in two pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSet {
    pub pairs: BTreeMap<(String, String), String>,
    pub per_domain: BTreeMap<String, usize>,
}

impl GoldSet {
    /// Builds the gold set; each pair is attributed to its pivot URL's
    /// domain. A URL used twice is a schema error.
    pub fn new<I, S>(pairs: I, mode: DomainMode) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        Self::build(pairs.into_iter().map(|(p, o)| (p, o, None)), mode)
    }

    /// As [`new`](Self::new) for `(pivot, other, other_lang)` triples. The
    /// one-to-one check applies within each language, so a pivot URL may
    /// have one counterpart per language.
    pub fn multilingual<I, S>(pairs: I, mode: DomainMode) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        Self::build(pairs.into_iter().map(|(p, o, l)| (p, o, Some(l))), mode)
    }

    fn build<I, S>(pairs: I, mode: DomainMode) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, Option<S>)>,
        S: AsRef<str>,
    {
        let mut gold = GoldSet::default();
        let mut seen: HashSet<(String, String)> = HashSet::new();
        for (p, o, lang) in pairs {
            let (p, o) = (p.as_ref().trim().to_lowercase(), o.as_ref().trim().to_lowercase());
            let lang = lang.map(|l| l.as_ref().trim().to_lowercase()).unwrap_or_default();
            for u in [&p, &o] {
                if !seen.insert((lang.clone(), u.clone())) {
                    return Err(Error::Schema(format!(
                        "gold alignment is not one-to-one: `{u}` appears twice"
                    )));
                }
            }
            let domain = domain_of(&p, mode)?;
            *gold.per_domain.entry(domain.clone()).or_insert(0) += 1;
            gold.pairs.insert((p, o), domain);
        }
        Ok(gold)
    }

    /// Reads `pivot_url \t other_url` lines, optionally followed by a third
    /// `other_lang` column.
    pub fn parse<R: BufRead>(reader: R, source: &str, mode: DomainMode) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                [p, o] | [p, o, _] if !p.trim().is_empty() && !o.trim().is_empty() => rows.push((
                    p.to_string(),
                    o.to_string(),
                    fields.get(2).map(|l| l.to_string()),
                )),
                _ => {
                    return Err(Error::Format {
                        path: source.to_string(),
                        line: i + 1,
                        message: "expected `pivot_url \\t other_url [\\t other_lang]`".into(),
                    })
                }
            }
        }
        Self::build(rows, mode)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRecall {
    pub recall: f64,
    pub found: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    /// Percentage of gold pairs found.
    pub recall: f64,
    pub found: usize,
    pub total: usize,
    pub per_domain: BTreeMap<String, DomainRecall>,
    /// Predicted pairs compared after optional re-filtering.
    pub predicted: usize,
    pub refiltered: bool,
}

fn percent(found: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        found as f64 / total as f64 * 100.0
    }
}

/// Greedy one-to-one filter by descending score, ties by URLs, applied
/// separately per other language. Order of the kept pairs follows the
/// filter's visiting order.
pub fn refilter_one_to_one(pred: &[AlignmentPair]) -> Vec<&AlignmentPair> {
    let mut sorted: Vec<&AlignmentPair> = pred.iter().collect();
    sorted.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.pivot_url.cmp(&b.pivot_url))
            .then_with(|| a.other_url.cmp(&b.other_url))
    });
    let mut used: HashMap<&str, (HashSet<String>, HashSet<String>)> = HashMap::new();
    sorted
        .into_iter()
        .filter(|p| {
            let (pivots, others) = used.entry(p.other_lang.as_str()).or_default();
            let (pu, ou) = (p.pivot_url.to_lowercase(), p.other_url.to_lowercase());
            if pivots.contains(&pu) || others.contains(&ou) {
                return false;
            }
            pivots.insert(pu);
            others.insert(ou);
            true
        })
        .collect()
}

/// Percentage of gold pairs present among the predictions, overall and per
/// gold domain.
pub fn evaluate_recall(pred: &[AlignmentPair], gold: &GoldSet, enforce_one_to_one: bool) -> Result<RecallReport> {
    if gold.is_empty() {
        return Err(Error::Usage("gold alignment is empty".into()));
    }
    let kept: Vec<&AlignmentPair> = if enforce_one_to_one {
        refilter_one_to_one(pred)
    } else {
        pred.iter().collect()
    };
    let predicted: BTreeSet<(String, String)> = kept
        .iter()
        .map(|p| (p.pivot_url.to_lowercase(), p.other_url.to_lowercase()))
        .collect();
    let mut found_by_domain: BTreeMap<&str, usize> = BTreeMap::new();
    for (pair, domain) in &gold.pairs {
        if predicted.contains(pair) {
            *found_by_domain.entry(domain.as_str()).or_insert(0) += 1;
        }
    }
    let per_domain = gold
        .per_domain
        .iter()
        .map(|(d, &total)| {
            let found = found_by_domain.get(d.as_str()).copied().unwrap_or(0);
            (
                d.clone(),
                DomainRecall {
                    recall: percent(found, total),
                    found,
                    total,
                },
            )
        })
        .collect();
    let found = found_by_domain.values().sum();
    Ok(RecallReport {
        recall: percent(found, gold.len()),
        found,
        total: gold.len(),
        per_domain,
        predicted: kept.len(),
        refiltered: enforce_one_to_one,
    })
}

impl fmt::Display for RecallReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .per_domain
            .keys()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("domain".len());
        writeln!(f, "{:<width$}  {:>8}  {:>8}  {:>8}", "domain", "found", "total", "recall")?;
        for (d, r) in &self.per_domain {
            writeln!(f, "{d:<width$}  {:>8}  {:>8}  {:>7.2}%", r.found, r.total, r.recall)?;
        }
        writeln!(
            f,
            "{:<width$}  {:>8}  {:>8}  {:>7.2}%",
            "TOTAL", self.found, self.total, self.recall
        )
    }
}

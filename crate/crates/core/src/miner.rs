//! Mines candidate language identifiers from aligned URL pairs that differ
//! by one token.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::cda::{AlignmentPair, Method};
use crate::error::{Error, Result};
use crate::urlmatch::STRUCTURAL_SEPARATORS;

/// A differing token pair and the number of URL pairs exhibiting it. An
/// empty token stands for an insertion or deletion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Candidate {
    pub token_pivot: String,
    pub token_other: String,
    pub support: usize,
}

/// Lowercased URL without scheme, split on structural separators. Empty
/// tokens are dropped.
pub fn url_tokens(url: &str) -> Vec<String> {
    let lowered = url.trim().to_lowercase();
    let rest = lowered.split_once("://").map_or(lowered.as_str(), |(_, r)| r);
    rest.split(STRUCTURAL_SEPARATORS)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

// Removes the `-`/`_` sub-parts two tokens share at either end, so
// `index-fr` vs `index-en` yields `fr` vs `en`.
fn refine<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    let split = |s: &'a str| -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start = 0;
        for (i, c) in s.char_indices() {
            if c == '-' || c == '_' {
                spans.push((start, i));
                start = i + 1;
            }
        }
        spans.push((start, s.len()));
        spans
    };
    let (pa, pb) = (split(a), split(b));
    let part = |s: &'a str, span: (usize, usize)| &s[span.0..span.1];
    let mut lead = 0;
    while lead < pa.len() && lead < pb.len() && part(a, pa[lead]) == part(b, pb[lead]) {
        lead += 1;
    }
    let mut trail = 0;
    while trail < pa.len() - lead
        && trail < pb.len() - lead
        && part(a, pa[pa.len() - 1 - trail]) == part(b, pb[pb.len() - 1 - trail])
    {
        trail += 1;
    }
    let slice = |s: &'a str, p: &[(usize, usize)]| {
        let (from, to) = (lead, p.len() - trail);
        if from >= to {
            ""
        } else {
            &s[p[from].0..p[to - 1].1]
        }
    };
    (slice(a, &pa), slice(b, &pb))
}

/// The single token difference between two URLs, if they are one
/// substitution (or, with `allow_indel`, one insertion or deletion) apart.
pub fn one_token_difference(
    pivot_url: &str,
    other_url: &str,
    allow_indel: bool,
) -> Option<(String, String)> {
    let a = url_tokens(pivot_url);
    let b = url_tokens(other_url);
    let diff = match a.len() as isize - b.len() as isize {
        0 => {
            let mut mismatch = a.iter().zip(&b).enumerate().filter(|(_, (x, y))| x != y);
            let (i, _) = mismatch.next()?;
            if mismatch.next().is_some() {
                return None;
            }
            let (x, y) = refine(&a[i], &b[i]);
            if (x.is_empty() || y.is_empty()) && !allow_indel {
                return None;
            }
            (x.to_string(), y.to_string())
        }
        d @ (1 | -1) if allow_indel => {
            let (long, short) = if d == 1 { (&a, &b) } else { (&b, &a) };
            let i = (0..short.len()).find(|&i| long[i] != short[i]).unwrap_or(short.len());
            if long[i + 1..] != short[i..] {
                return None;
            }
            let t = long[i].clone();
            if d == 1 {
                (t, String::new())
            } else {
                (String::new(), t)
            }
        }
        _ => return None,
    };
    (diff.0 != diff.1).then_some(diff)
}

/// Aggregates one-token differences over content-aligned pairs and keeps
/// those seen at least `min_support` times, by descending support then
/// token order. Pairs from other methods are ignored.
pub fn mine_identifiers(pairs: &[AlignmentPair], min_support: usize, allow_indel: bool) -> Vec<Candidate> {
    let counts = pairs
        .par_iter()
        .filter(|p| p.method == Method::Cda)
        .filter_map(|p| one_token_difference(&p.pivot_url, &p.other_url, allow_indel))
        .fold(HashMap::new, |mut m: HashMap<(String, String), usize>, k| {
            *m.entry(k).or_insert(0) += 1;
            m
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let mut out: Vec<Candidate> = counts
        .into_iter()
        .filter(|(_, n)| *n >= min_support.max(1))
        .map(|((token_pivot, token_other), support)| Candidate {
            token_pivot,
            token_other,
            support,
        })
        .collect();
    out.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.token_pivot.cmp(&b.token_pivot))
            .then_with(|| a.token_other.cmp(&b.token_other))
    });
    out
}

/// `token_pivot \t token_other \t support`.
pub fn write_candidates<'a, W: Write>(
    mut w: W,
    candidates: impl IntoIterator<Item = &'a Candidate>,
) -> std::io::Result<()> {
    for c in candidates {
        writeln!(w, "{}\t{}\t{}", c.token_pivot, c.token_other, c.support)?;
    }
    Ok(())
}

pub fn read_candidates<R: BufRead>(reader: R, source: &str) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = match fields[..] {
            [a, b, n] => n.trim().parse().ok().map(|n| (a, b, n)),
            _ => None,
        };
        let Some((a, b, support)) = parsed else {
            return Err(Error::Format {
                path: source.to_string(),
                line: i + 1,
                message: "expected `token_pivot \\t token_other \\t support`".into(),
            });
        };
        out.push(Candidate {
            token_pivot: a.to_string(),
            token_other: b.to_string(),
            support,
        });
    }
    Ok(out)
}

//! URL-matching baseline: two documents align when their URLs coincide after
//! removing one language identifier.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;

use crate::cda::{AlignmentPair, Method};
use crate::corpus::CorpusPartition;
use crate::error::{Error, Result};

/// Characters that split a URL into tokens.
pub const SEPARATORS: [char; 7] = ['/', '_', '-', '.', '=', '?', '&'];

/// Separators that may never occur inside an identifier. `-` and `_` may,
/// so that compound tags such as `fr-fr` or `vi_vn` are expressible.
pub const STRUCTURAL_SEPARATORS: [char; 5] = ['/', '.', '=', '?', '&'];

const DEFAULT_IDENTIFIERS: &str = include_str!("../data/identifiers.txt");

/// Lowercase language identifiers recognised in URLs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifierSet {
    ids: HashSet<String>,
    // Longest identifier counted in `-`/`_`-joined parts.
    max_parts: usize,
}

impl Default for IdentifierSet {
    /// ISO 639-1 and 639-2 codes plus English language names.
    fn default() -> Self {
        Self::parse(DEFAULT_IDENTIFIERS.as_bytes(), "identifiers.txt")
            .expect("bundled identifier list is valid")
    }
}

impl IdentifierSet {
    pub fn empty() -> Self {
        IdentifierSet {
            ids: HashSet::new(),
            max_parts: 1,
        }
    }

    /// Builds a set from identifiers; they are lowercased and trimmed.
    pub fn from_ids<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::empty();
        for id in ids {
            set.insert(id.as_ref())?;
        }
        Ok(set)
    }

    /// Adds an identifier. Empty identifiers and ones containing a
    /// structural separator are rejected.
    pub fn insert(&mut self, id: &str) -> Result<bool> {
        let id = id.trim().to_lowercase();
        if id.is_empty() || id.contains(STRUCTURAL_SEPARATORS) || id.starts_with(['-', '_']) || id.ends_with(['-', '_']) {
            return Err(Error::Config(format!("invalid URL identifier `{id}`")));
        }
        self.max_parts = self.max_parts.max(id.split(['-', '_']).count());
        Ok(self.ids.insert(id))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains(token)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Identifiers in lexicographic order.
    pub fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.ids.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// One identifier per line; `#` starts a comment line.
    pub fn parse<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut set = Self::empty();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            set.insert(line).map_err(|e| Error::Format {
                path: source.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Positions eligible for stripping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct UrlStripOptions {
    /// Remove whole query parameters whose value (or bare name) is an
    /// identifier.
    pub query_values: bool,
    /// Remove the first host label when it is an identifier and the host has
    /// more than two labels.
    pub host_labels: bool,
}

impl Default for UrlStripOptions {
    fn default() -> Self {
        UrlStripOptions {
            query_values: true,
            host_labels: false,
        }
    }
}

struct UrlParts<'a> {
    scheme: &'a str,
    host: &'a str,
    path: &'a str,
    query: Option<&'a str>,
    fragment: &'a str,
}

fn split_url(url: &str) -> UrlParts<'_> {
    let (scheme, rest) = match url.find("://") {
        Some(i) => url.split_at(i + 3),
        None => ("", url),
    };
    let (rest, fragment) = match rest.find('#') {
        Some(i) => rest.split_at(i),
        None => (rest, ""),
    };
    let host_end = rest.find(['/', '?']).unwrap_or(rest.len());
    let (host, rest) = rest.split_at(host_end);
    let (path, query) = match rest.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (rest, None),
    };
    UrlParts {
        scheme,
        host,
        path,
        query,
        fragment,
    }
}

fn sep_rank(c: char) -> u8 {
    match c {
        '/' => 6,
        '?' => 5,
        '&' => 4,
        '=' => 3,
        '.' => 2,
        _ => 1,
    }
}

fn run_rank(run: &str) -> u8 {
    run.chars().map(sep_rank).max().unwrap_or(0)
}

/// Splits `s` so that `s = seps[0] + toks[0] + seps[1] + … + toks[n-1] + seps[n]`.
/// Inner separator runs are non-empty.
fn tokenize_path(s: &str) -> (Vec<&str>, Vec<&str>) {
    let mut toks = Vec::new();
    let mut seps = Vec::new();
    let mut start = 0;
    let mut in_token = false;
    for (i, c) in s.char_indices() {
        let is_sep = SEPARATORS.contains(&c);
        if is_sep && in_token {
            toks.push(&s[start..i]);
            start = i;
            in_token = false;
        } else if !is_sep && !in_token {
            seps.push(&s[start..i]);
            start = i;
            in_token = true;
        }
    }
    if in_token {
        toks.push(&s[start..]);
        seps.push("");
    } else {
        seps.push(&s[start..]);
    }
    (toks, seps)
}

// Path variants with one identifier (possibly a `-`/`_`-joined run of
// tokens) removed. Of the two separator runs around it the stronger stays,
// the left one on ties; at either end of the path the lone neighbour goes.
fn strip_path(path: &str, ids: &IdentifierSet, out: &mut Vec<String>) {
    let (toks, seps) = tokenize_path(path);
    for i in 0..toks.len() {
        let mut joined = String::new();
        for j in i..toks.len().min(i + ids.max_parts) {
            if j > i {
                if !matches!(seps[j], "-" | "_") {
                    break;
                }
                joined.push_str(seps[j]);
            }
            joined.push_str(toks[j]);
            if !ids.contains(&joined) {
                continue;
            }
            let (left, right) = (seps[i], seps[j + 1]);
            let keep = if left.is_empty() || right.is_empty() {
                ""
            } else if run_rank(right) > run_rank(left) {
                right
            } else {
                left
            };
            let mut s = String::with_capacity(path.len());
            for k in 0..i {
                s.push_str(seps[k]);
                s.push_str(toks[k]);
            }
            s.push_str(keep);
            for k in j + 1..toks.len() {
                if k > j + 1 {
                    s.push_str(seps[k]);
                }
                s.push_str(toks[k]);
            }
            if j + 1 < toks.len() {
                s.push_str(seps[toks.len()]);
            }
            out.push(s);
        }
    }
}

fn strip_query(query: &str, ids: &IdentifierSet, out: &mut Vec<Option<String>>) {
    let params: Vec<&str> = query.split('&').collect();
    for (i, p) in params.iter().enumerate() {
        let value = p.split_once('=').map_or(*p, |(_, v)| v);
        if !ids.contains(value) {
            continue;
        }
        let rest: Vec<&str> = params
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, q)| *q)
            .collect();
        out.push(if rest.is_empty() { None } else { Some(rest.join("&")) });
    }
}

/// Lowercased `url` plus every variant with one language identifier removed
/// from the path (and, per `opts`, from the query or host).
pub fn strip_identifiers(url: &str, ids: &IdentifierSet, opts: &UrlStripOptions) -> BTreeSet<String> {
    let lowered = url.trim().to_lowercase();
    let parts = split_url(&lowered);
    let assemble = |host: &str, path: &str, query: Option<&str>| {
        let mut s = String::with_capacity(lowered.len());
        s.push_str(parts.scheme);
        s.push_str(host);
        s.push_str(path);
        if let Some(q) = query {
            s.push('?');
            s.push_str(q);
        }
        s.push_str(parts.fragment);
        s
    };

    let mut forms = BTreeSet::new();
    let mut paths = Vec::new();
    strip_path(parts.path, ids, &mut paths);
    for p in &paths {
        forms.insert(assemble(parts.host, p, parts.query));
    }
    if opts.query_values {
        if let Some(q) = parts.query {
            let mut queries = Vec::new();
            strip_query(q, ids, &mut queries);
            for q in queries {
                forms.insert(assemble(parts.host, parts.path, q.as_deref()));
            }
        }
    }
    if opts.host_labels {
        if let Some((first, rest)) = parts.host.split_once('.') {
            if rest.contains('.') && ids.contains(first) {
                forms.insert(assemble(rest, parts.path, parts.query));
            }
        }
    }
    forms.insert(lowered.clone());
    forms
}

/// True when the normalized forms of `a` and `b` intersect.
pub fn urls_match(a: &str, b: &str, ids: &IdentifierSet, opts: &UrlStripOptions) -> bool {
    let fa = strip_identifiers(a, ids, opts);
    strip_identifiers(b, ids, opts).iter().any(|f| fa.contains(f))
}

/// URL-baseline alignment of one domain. Other-language documents are
/// visited in URL order and each takes the smallest still-free pivot URL
/// sharing a normalized form. Pairs score 1.
pub fn match_urls(
    partition: &CorpusPartition,
    pivot_lang: &str,
    other_lang: &str,
    ids: &IdentifierSet,
    opts: &UrlStripOptions,
) -> Vec<AlignmentPair> {
    let mut pivot_urls: Vec<&str> = partition.docs(pivot_lang).iter().map(|d| d.url.as_str()).collect();
    pivot_urls.sort_unstable();
    pivot_urls.dedup();
    let mut index: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, u) in pivot_urls.iter().enumerate() {
        for f in strip_identifiers(u, ids, opts) {
            index.entry(f).or_default().push(i);
        }
    }
    let mut other_urls: Vec<&str> = partition.docs(other_lang).iter().map(|d| d.url.as_str()).collect();
    other_urls.sort_unstable();
    other_urls.dedup();

    let mut used = vec![false; pivot_urls.len()];
    let mut out = Vec::new();
    for o in other_urls {
        let best = strip_identifiers(o, ids, opts)
            .iter()
            .filter_map(|f| index.get(f))
            .flatten()
            .copied()
            .filter(|&i| !used[i])
            .min();
        if let Some(i) = best {
            used[i] = true;
            out.push(AlignmentPair {
                domain: partition.domain.clone(),
                pivot_url: pivot_urls[i].to_string(),
                other_url: o.to_string(),
                other_lang: other_lang.to_string(),
                score: 1.0,
                method: Method::Url,
            });
        }
    }
    out
}

/// [`match_urls`] over every domain and language, in domain then language
/// order.
pub fn align_urls(
    parts: &BTreeMap<String, CorpusPartition>,
    pivot_lang: &str,
    langs: &[String],
    ids: &IdentifierSet,
    opts: &UrlStripOptions,
) -> Vec<AlignmentPair> {
    let mut langs: Vec<&str> = langs.iter().map(String::as_str).filter(|l| *l != pivot_lang).collect();
    langs.sort_unstable();
    langs.dedup();
    let tasks: Vec<(&CorpusPartition, &str)> = parts
        .values()
        .flat_map(|p| langs.iter().map(move |l| (p, *l)))
        .collect();
    tasks
        .par_iter()
        .map(|(p, l)| match_urls(p, pivot_lang, l, ids, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

//! Document ingestion: record parsing, HTML text extraction, tokenization,
//! language identification and per-domain partitioning.

mod group;
mod html;
mod langid;
mod record;
mod tokenize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use group::{group_by_domain, Grouper};
pub use html::extract_text;
pub use langid::{detect_language, Detection, LanguageDetector, NgramDetector};
pub use record::{
    parse_record, read_partitions, write_partitions, IngestStats, Ingestor, RecordFormat,
};
pub use tokenize::tokenize;

/// One web page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub url: String,
    pub domain: String,
    pub lang: String,
    pub tokens: Vec<String>,
    /// Character count of the extracted text.
    pub raw_length: usize,
}

/// All documents of one web domain, grouped by language. Each language list
/// is sorted by URL.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusPartition {
    pub domain: String,
    pub by_lang: BTreeMap<String, Vec<DocumentRecord>>,
}

impl CorpusPartition {
    pub fn new(domain: impl Into<String>) -> Self {
        CorpusPartition {
            domain: domain.into(),
            by_lang: BTreeMap::new(),
        }
    }

    pub fn docs(&self, lang: &str) -> &[DocumentRecord] {
        self.by_lang.get(lang).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.by_lang.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a URL's host is reduced to the grouping key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainMode {
    /// Full hostname, lowercased, without scheme, port or credentials.
    #[default]
    Host,
    /// Registrable domain: the label before the public suffix, using a
    /// built-in list of common multi-label suffixes.
    Registrable,
}

// Multi-label public suffixes recognised in `DomainMode::Registrable`. Any
// other host keeps its last two labels.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "ac.jp", "ac.uk", "co.id", "co.il", "co.in", "co.jp", "co.kr", "co.nz", "co.th", "co.uk",
    "co.za", "com.ar", "com.au", "com.br", "com.cn", "com.hk", "com.mx", "com.my", "com.sg",
    "com.tr", "com.tw", "com.ua", "edu.au", "edu.cn", "gc.ca", "go.jp", "gov.au", "gov.cn",
    "gov.uk", "ne.jp", "net.au", "net.cn", "or.jp", "org.au", "org.cn", "org.uk",
];

/// Host of `url` used for domain grouping. URLs without a scheme are read
/// as `http://`.
pub fn domain_of(url: &str, mode: DomainMode) -> Result<String> {
    let host = host_of(url)?;
    Ok(match mode {
        DomainMode::Host => host,
        DomainMode::Registrable => registrable(&host),
    })
}

fn host_of(url: &str) -> Result<String> {
    let trimmed = url.trim();
    let parsed = match url::Url::parse(trimmed) {
        Ok(u) if u.has_host() => u,
        Ok(_) | Err(url::ParseError::RelativeUrlWithoutBase) => {
            url::Url::parse(&format!("http://{}", trimmed.trim_start_matches('/')))
                .map_err(|e| Error::Schema(format!("invalid url `{url}`: {e}")))?
        }
        Err(e) => return Err(Error::Schema(format!("invalid url `{url}`: {e}"))),
    };
    match parsed.host_str() {
        Some(h) if !h.is_empty() => Ok(h.trim_end_matches('.').to_ascii_lowercase()),
        _ => Err(Error::Schema(format!("url `{url}` has no host"))),
    }
}

fn registrable(host: &str) -> String {
    if host.starts_with('[') || host.parse::<std::net::Ipv4Addr>().is_ok() {
        return host.to_string();
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        return host.to_string();
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let keep = if MULTI_LABEL_SUFFIXES.contains(&last_two.as_str()) {
        3
    } else {
        2
    };
    labels[labels.len().saturating_sub(keep)..].join(".")
}

/// Lowercases a language tag and checks its shape (`xx`, `xxx`, optionally
/// followed by `-subtag`s). Underscores are read as hyphens.
pub fn normalize_lang_tag(tag: &str) -> Option<String> {
    let tag = tag.trim().to_ascii_lowercase().replace('_', "-");
    let mut parts = tag.split('-');
    let primary = parts.next()?;
    if !(2..=3).contains(&primary.len()) || !primary.bytes().all(|b| b.is_ascii_lowercase()) {
        return None;
    }
    for sub in parts {
        if sub.is_empty() || sub.len() > 8 || !sub.bytes().all(|b| b.is_ascii_alphanumeric()) {
            return None;
        }
    }
    Some(tag)
}

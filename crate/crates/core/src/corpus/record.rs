use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use super::{
    detect_language, domain_of, extract_text, normalize_lang_tag, tokenize, CorpusPartition,
    DocumentRecord, DomainMode, Grouper, LanguageDetector, NgramDetector,
};
use crate::error::{Error, Result};
use crate::fmt::unescape_tsv;
use crate::UNDETERMINED;

/// Serialization of input records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, Deserialize)]
pub enum RecordFormat {
    /// One JSON object per line with `url`, optional `lang`, and exactly one
    /// of `html` or `text`.
    #[default]
    #[serde(rename = "jsonl")]
    JsonLines,
    /// `url \t lang \t text`, with `\t`, `\n` and `\\` escaped in the text.
    #[serde(rename = "tsv")]
    Tsv,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json-lines" | "jsonlines" => Ok(RecordFormat::JsonLines),
            "tsv" => Ok(RecordFormat::Tsv),
            other => Err(Error::Usage(format!("unknown record format `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    url: Option<String>,
    lang: Option<String>,
    html: Option<String>,
    text: Option<String>,
}

enum Content {
    Html(String),
    Text(String),
}

/// Parses one serialized record. The language comes from the record when
/// present, otherwise it is `"und"`; detection is left to [`Ingestor`].
pub fn parse_record(line: &[u8], format: RecordFormat) -> Result<DocumentRecord> {
    parse_record_with(line, format, DomainMode::Host)
}

fn parse_record_with(line: &[u8], format: RecordFormat, mode: DomainMode) -> Result<DocumentRecord> {
    let line = String::from_utf8_lossy(line);
    let line = line.trim_end_matches(['\n', '\r']);
    let (url, lang, content) = match format {
        RecordFormat::JsonLines => parse_json(line)?,
        RecordFormat::Tsv => parse_tsv(line)?,
    };
    let url = url.trim().to_string();
    if url.is_empty() {
        return Err(Error::Schema("empty `url` field".into()));
    }
    let domain = domain_of(&url, mode)?;
    let lang = match lang.as_deref().map(str::trim) {
        None | Some("") => UNDETERMINED.to_string(),
        Some(tag) => normalize_lang_tag(tag)
            .ok_or_else(|| Error::Schema(format!("invalid language tag `{tag}`")))?,
    };
    let text = match content {
        Content::Html(html) => extract_text(&html),
        Content::Text(text) => text,
    };
    Ok(DocumentRecord {
        url,
        domain,
        lang,
        tokens: tokenize(&text),
        raw_length: text.chars().count(),
    })
}

fn parse_json(line: &str) -> Result<(String, Option<String>, Content)> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| {
        if e.is_data() {
            Error::Schema(e.to_string())
        } else {
            Error::Parse {
                offset: byte_offset(line, e.line(), e.column()),
                message: e.to_string(),
            }
        }
    })?;
    let url = raw
        .url
        .ok_or_else(|| Error::Schema("missing required field `url`".into()))?;
    let content = match (raw.html, raw.text) {
        (Some(html), None) => Content::Html(html),
        (None, Some(text)) => Content::Text(text),
        (None, None) => {
            return Err(Error::Schema(
                "record needs one of the fields `html` or `text`".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Schema(
                "record has both `html` and `text`; expected exactly one".into(),
            ))
        }
    };
    Ok((url, raw.lang, content))
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn parse_tsv(line: &str) -> Result<(String, Option<String>, Content)> {
    let mut fields = line.splitn(3, '\t');
    let url = fields.next().unwrap_or_default();
    let (Some(lang), Some(text)) = (fields.next(), fields.next()) else {
        return Err(Error::Parse {
            offset: line.len(),
            message: "expected 3 tab-separated fields: url, lang, text".into(),
        });
    };
    if let Some(extra) = text.find('\t') {
        return Err(Error::Parse {
            offset: url.len() + lang.len() + 2 + extra,
            message: "unescaped tab in text field".into(),
        });
    }
    if url.trim().is_empty() {
        return Err(Error::Schema("missing required field `url`".into()));
    }
    Ok((
        url.to_string(),
        Some(lang.to_string()),
        Content::Text(unescape_tsv(text).into_owned()),
    ))
}

/// Counts from one ingestion run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub lines: usize,
    pub records: usize,
    pub rejected: usize,
    /// Records whose language was filled in by the detector.
    pub detected: usize,
}

/// Streaming ingestion: parse, extract, tokenize, fill missing languages,
/// then group by domain.
pub struct Ingestor<'d> {
    pub format: RecordFormat,
    pub domain_mode: DomainMode,
    pub detector: &'d dyn LanguageDetector,
    pub min_confidence: f64,
}

impl Ingestor<'static> {
    pub fn new(format: RecordFormat) -> Self {
        Ingestor {
            format,
            domain_mode: DomainMode::Host,
            detector: NgramDetector::bundled(),
            min_confidence: 0.5,
        }
    }
}

impl Ingestor<'_> {
    /// Parses one line; records without a language tag go through the
    /// detector.
    pub fn record(&self, line: &[u8]) -> Result<(DocumentRecord, bool)> {
        let mut rec = parse_record_with(line, self.format, self.domain_mode)?;
        let mut detected = false;
        if rec.lang == UNDETERMINED {
            rec.lang = detect_language(self.detector, &rec.tokens, self.min_confidence);
            detected = rec.lang != UNDETERMINED;
        }
        Ok((rec, detected))
    }

    /// Ingests every line of `input`. Malformed lines are logged and counted,
    /// not fatal.
    pub fn ingest<R: BufRead>(
        &self,
        input: R,
        source: &str,
    ) -> Result<(BTreeMap<String, CorpusPartition>, IngestStats)> {
        let mut lines = Vec::new();
        for (i, line) in input.split(b'\n').enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            lines.push((i + 1, line));
        }
        let (grouper, stats) = lines
            .par_iter()
            .fold(
                || (Grouper::default(), IngestStats::default()),
                |(mut g, mut st), (lineno, line)| {
                    st.lines += 1;
                    match self.record(line) {
                        Ok((rec, detected)) => {
                            st.records += 1;
                            st.detected += usize::from(detected);
                            g.insert(rec);
                        }
                        Err(e) => {
                            log::warn!("{source}:{lineno}: {e}");
                            st.rejected += 1;
                        }
                    }
                    (g, st)
                },
            )
            .reduce(
                || (Grouper::default(), IngestStats::default()),
                |(mut ga, sa), (gb, sb)| {
                    ga.merge(gb);
                    (
                        ga,
                        IngestStats {
                            lines: sa.lines + sb.lines,
                            records: sa.records + sb.records,
                            rejected: sa.rejected + sb.rejected,
                            detected: sa.detected + sb.detected,
                        },
                    )
                },
            );
        Ok((grouper.finish(), stats))
    }

    pub fn ingest_file(
        &self,
        path: &Path,
    ) -> Result<(BTreeMap<String, CorpusPartition>, IngestStats)> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        self.ingest(BufReader::new(file), &path.display().to_string())
    }
}

/// Writes one directory per domain with one JSON-lines file per language.
pub fn write_partitions(dir: &Path, partitions: &BTreeMap<String, CorpusPartition>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (domain, part) in partitions {
        let ddir = dir.join(domain);
        fs::create_dir_all(&ddir).map_err(|e| Error::io(&ddir, e))?;
        for (lang, docs) in &part.by_lang {
            let path = ddir.join(format!("{lang}.jsonl"));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            for doc in docs {
                serde_json::to_writer(&mut w, doc).expect("records serialize");
                w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Reads a directory written by [`write_partitions`].
pub fn read_partitions(dir: &Path) -> Result<BTreeMap<String, CorpusPartition>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let ddir = entry.path();
        if !ddir.is_dir() {
            continue;
        }
        let domain = entry.file_name().to_string_lossy().into_owned();
        let mut part = CorpusPartition::new(domain.clone());
        for file in fs::read_dir(&ddir).map_err(|e| Error::io(&ddir, e))? {
            let path = file.map_err(|e| Error::io(&ddir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let lang = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let reader = BufReader::new(fs::File::open(&path).map_err(|e| Error::io(&path, e))?);
            let mut docs = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let doc: DocumentRecord =
                    serde_json::from_str(&line).map_err(|e| Error::Format {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                docs.push(doc);
            }
            docs.sort_by(|a, b| a.url.cmp(&b.url));
            part.by_lang.insert(lang, docs);
        }
        out.insert(domain, part);
    }
    Ok(out)
}

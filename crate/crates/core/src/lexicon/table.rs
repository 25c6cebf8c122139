use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::normalize_lang_tag;
use crate::error::{Error, Result};

/// Sparse conditional probabilities `P(tgt | src)`, stored by source row.
/// Absent entries read as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranslationTable {
    pub src_lang: String,
    pub tgt_lang: String,
    pub probs: HashMap<String, HashMap<String, f64>>,
}

impl TranslationTable {
    pub fn new(src_lang: &str, tgt_lang: &str) -> Result<Self> {
        Ok(TranslationTable {
            src_lang: lang_tag(src_lang)?,
            tgt_lang: lang_tag(tgt_lang)?,
            probs: HashMap::new(),
        })
    }

    /// Sets `P(tgt | src)`, overwriting an earlier value.
    pub fn insert(&mut self, src: &str, tgt: &str, p: f64) {
        debug_assert!((0.0..=1.0).contains(&p));
        self.probs
            .entry(src.to_string())
            .or_default()
            .insert(tgt.to_string(), p);
    }

    pub fn get(&self, src: &str, tgt: &str) -> f64 {
        self.probs
            .get(src)
            .and_then(|row| row.get(tgt))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, src: &str) -> Option<&HashMap<String, f64>> {
        self.probs.get(src)
    }

    /// Number of stored (src, tgt) entries.
    pub fn len(&self) -> usize {
        self.probs.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Source words whose outgoing mass exceeds `1 + tolerance`, sorted.
    pub fn overfull_rows(&self, tolerance: f64) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .probs
            .iter()
            .filter_map(|(src, row)| {
                let sum: f64 = row.values().sum();
                (sum > 1.0 + tolerance).then(|| (src.clone(), sum))
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Reads `src \t tgt \t prob` lines. Lines without a tab are split on
    /// whitespace instead. Blank lines are ignored.
    pub fn from_reader<R: BufRead>(
        reader: R,
        source: &str,
        src_lang: &str,
        tgt_lang: &str,
    ) -> Result<Self> {
        let mut table = TranslationTable::new(src_lang, tgt_lang)?;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').collect()
            } else {
                line.split_whitespace().collect()
            };
            let format_err = |message: String| Error::Format {
                path: source.to_string(),
                line: lineno,
                message,
            };
            let [src, tgt, prob] = fields[..] else {
                return Err(format_err(format!(
                    "expected 3 fields (src, tgt, prob), found {}",
                    fields.len()
                )));
            };
            let p: f64 = prob
                .trim()
                .parse()
                .ok()
                .filter(|p: &f64| !p.is_nan())
                .ok_or_else(|| format_err(format!("non-numeric probability `{prob}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Range {
                    path: source.to_string(),
                    line: lineno,
                    value: p,
                });
            }
            table.insert(src.trim(), tgt.trim(), p);
        }
        Ok(table)
    }
}

/// Loads a lexical translation table from a TSV file.
pub fn load_translation_table(path: &Path, src_lang: &str, tgt_lang: &str) -> Result<TranslationTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    TranslationTable::from_reader(
        BufReader::new(file),
        &path.display().to_string(),
        src_lang,
        tgt_lang,
    )
}

fn lang_tag(tag: &str) -> Result<String> {
    normalize_lang_tag(tag).ok_or_else(|| Error::Config(format!("unknown language tag `{tag}`")))
}

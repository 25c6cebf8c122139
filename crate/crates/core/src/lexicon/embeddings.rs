use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;

use super::TranslationTable;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_N: usize = 20;

/// Word vectors in a shared dimensionality. Row `i` of `vectors` belongs to
/// `words[i]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl Embeddings {
    pub fn new(dim: usize) -> Self {
        Embeddings {
            dim,
            ..Default::default()
        }
    }

    /// Adds a word; a vector of the wrong length is a shape error.
    pub fn push(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                found: vector.len(),
                word: word.to_string(),
            });
        }
        self.words.push(word.to_string());
        self.vectors.push(vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Reads the text format: a `count dim` header, then `word v1 … vdim`
    /// per line.
    pub fn from_reader<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let format_err = |line: usize, message: String| Error::Format {
            path: source.to_string(),
            line,
            message,
        };
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io(source, e))?,
            None => return Err(format_err(1, "missing `count dim` header".into())),
        };
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match parts[..] {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => (c, d),
                _ => return Err(format_err(1, format!("bad header `{header}`"))),
            },
            _ => return Err(format_err(1, format!("bad header `{header}`"))),
        };
        let mut emb = Embeddings::new(dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(source, e))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| format_err(i + 1, format!("bad component for `{word}`: {e}")))?;
            emb.push(word, vector)?;
        }
        if emb.len() != count {
            log::warn!("{source}: header announces {count} words, read {}", emb.len());
        }
        Ok(emb)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), &path.display().to_string())
    }

    // Unit-length copies of the nonzero vectors, plus the number skipped.
    fn normalized(&self) -> (Vec<(&str, Vec<f64>)>, usize) {
        let mut out = Vec::with_capacity(self.len());
        let mut skipped = 0;
        for (w, v) in self.words.iter().zip(&self.vectors) {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                out.push((w.as_str(), v.iter().map(|x| x / norm).collect()));
            } else {
                skipped += 1;
            }
        }
        (out, skipped)
    }
}

/// Both directions derived from one pair of embedding spaces.
#[derive(Debug, Clone)]
pub struct EmbeddingTables {
    pub forward: TranslationTable,
    pub backward: TranslationTable,
    /// Zero vectors skipped across both spaces.
    pub skipped_zero: usize,
}

/// Turns cosine similarities into translation probabilities. For each source
/// word the `top_n` most similar target words (ties by word) are kept,
/// negative similarities clamp to 0 and the kept scores are normalized to
/// sum to 1. Each direction is built independently.
pub fn table_from_embeddings(
    src: &Embeddings,
    tgt: &Embeddings,
    src_lang: &str,
    tgt_lang: &str,
    top_n: usize,
) -> Result<EmbeddingTables> {
    if src.dim != tgt.dim {
        return Err(Error::Shape {
            expected: src.dim,
            found: tgt.dim,
            word: tgt.words.first().cloned().unwrap_or_default(),
        });
    }
    let (s, skipped_s) = src.normalized();
    let (t, skipped_t) = tgt.normalized();
    if skipped_s + skipped_t > 0 {
        log::warn!("skipped {} zero embedding vectors", skipped_s + skipped_t);
    }
    let mut forward = TranslationTable::new(src_lang, tgt_lang)?;
    forward.probs = directed(&s, &t, top_n);
    let mut backward = TranslationTable::new(tgt_lang, src_lang)?;
    backward.probs = directed(&t, &s, top_n);
    Ok(EmbeddingTables {
        forward,
        backward,
        skipped_zero: skipped_s + skipped_t,
    })
}

fn directed(
    from: &[(&str, Vec<f64>)],
    to: &[(&str, Vec<f64>)],
    top_n: usize,
) -> HashMap<String, HashMap<String, f64>> {
    from.par_iter()
        .filter_map(|(word, v)| {
            let mut sims: Vec<(f64, &str)> = to
                .iter()
                .map(|(w, u)| (dot(v, u).max(0.0), *w))
                .collect();
            let by_rank = |a: &(f64, &str), b: &(f64, &str)| b.0.total_cmp(&a.0).then(a.1.cmp(b.1));
            if sims.len() > top_n {
                if top_n > 0 {
                    sims.select_nth_unstable_by(top_n - 1, by_rank);
                }
                sims.truncate(top_n);
            }
            sims.sort_by(by_rank);
            let total: f64 = sims.iter().map(|s| s.0).sum();
            if total <= 0.0 {
                return None;
            }
            let row: HashMap<String, f64> = sims
                .into_iter()
                .filter(|s| s.0 > 0.0)
                .map(|(s, w)| (w.to_string(), s / total))
                .collect();
            Some((word.to_string(), row))
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

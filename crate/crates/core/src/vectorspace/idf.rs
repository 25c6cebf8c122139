use super::Vocabulary;
use crate::error::{Error, Result};

/// `idf[w] = ln(1 + |D| / (1 + df[w]))`, indexed by vocabulary dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdfModel {
    pub collection_size: usize,
    pub doc_freq: Vec<u32>,
    pub idf: Vec<f64>,
}

impl IdfModel {
    pub fn from_doc_freq(collection_size: usize, doc_freq: Vec<u32>) -> Result<Self> {
        if collection_size == 0 {
            return Err(Error::Config("IDF is undefined for an empty collection".into()));
        }
        let n = collection_size as f64;
        let idf = doc_freq
            .iter()
            .map(|&df| (n / (1.0 + df as f64)).ln_1p())
            .collect();
        Ok(IdfModel {
            collection_size,
            doc_freq,
            idf,
        })
    }

    pub fn get(&self, dim: u32) -> f64 {
        self.idf[dim as usize]
    }
}

/// Document-frequency accumulator over a fixed vocabulary. `merge` is
/// associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocFreq {
    pub docs: usize,
    pub counts: Vec<u32>,
    seen: Vec<u32>,
}

impl DocFreq {
    pub fn new(vocab_len: usize) -> Self {
        DocFreq {
            docs: 0,
            counts: vec![0; vocab_len],
            seen: Vec::new(),
        }
    }

    pub fn add(&mut self, tokens: &[String], vocab: &Vocabulary) {
        self.docs += 1;
        self.seen.clear();
        self.seen.extend(tokens.iter().filter_map(|t| vocab.id(t)));
        self.seen.sort_unstable();
        self.seen.dedup();
        for &d in &self.seen {
            self.counts[d as usize] += 1;
        }
    }

    pub fn merge(mut self, other: DocFreq) -> DocFreq {
        self.docs += other.docs;
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    pub fn finish(self) -> Result<IdfModel> {
        IdfModel::from_doc_freq(self.docs, self.counts)
    }
}

/// Counts, for each vocabulary word, the documents containing it.
pub fn compute_idf<'a>(
    docs: impl IntoIterator<Item = &'a [String]>,
    vocab: &Vocabulary,
) -> Result<IdfModel> {
    let mut df = DocFreq::new(vocab.len());
    for d in docs {
        df.add(d, vocab);
    }
    df.finish()
}

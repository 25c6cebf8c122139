use super::{IdfModel, Vocabulary};

/// Document vector over vocabulary dimensions. Dimensions are strictly
/// increasing and weights positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub doc_url: String,
    pub entries: Vec<(u32, f64)>,
    pub norm_applied: bool,
}

impl SparseVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// TF×IDF over the vocabulary words present in `tokens`, scaled to unit ℓ2
/// norm. A document without vocabulary hits yields the empty vector.
pub fn vectorize(url: &str, tokens: &[String], vocab: &Vocabulary, idf: &IdfModel) -> SparseVector {
    let mut ids: Vec<u32> = tokens.iter().filter_map(|t| vocab.id(t)).collect();
    ids.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for chunk in ids.chunk_by(|a, b| a == b) {
        let dim = chunk[0];
        entries.push((dim, chunk.len() as f64 * idf.get(dim)));
    }
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVector {
        doc_url: url.to_string(),
        entries,
        norm_applied: true,
    }
}

use std::collections::{HashMap, HashSet};

pub const DEFAULT_SKIP_TOP_K: usize = 100;
pub const DEFAULT_CAPACITY: usize = 10_000;

/// Ordered word list with a dense index. Dimension `i` is `words[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub words: Vec<String>,
    pub index: HashMap<String, u32>,
    pub skip_top_k: usize,
    pub capacity: usize,
}

impl Vocabulary {
    /// Wraps an already ranked word list. Later duplicates are dropped.
    pub fn from_words(words: impl IntoIterator<Item = String>, skip_top_k: usize, capacity: usize) -> Self {
        let mut v = Vocabulary {
            skip_top_k,
            capacity,
            ..Default::default()
        };
        for w in words {
            if v.words.len() >= capacity {
                break;
            }
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.words.len() as u32);
                v.words.push(w);
            }
        }
        v
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Corpus token frequencies. `merge` is associative and commutative, so
/// counts may be built in parallel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts(pub HashMap<String, u64>);

impl TokenCounts {
    pub fn add(&mut self, tokens: &[String]) {
        for t in tokens {
            if let Some(c) = self.0.get_mut(t.as_str()) {
                *c += 1;
            } else {
                self.0.insert(t.clone(), 1);
            }
        }
    }

    pub fn merge(mut self, other: TokenCounts) -> TokenCounts {
        let (mut big, small) = if self.0.len() >= other.0.len() {
            (std::mem::take(&mut self.0), other.0)
        } else {
            (other.0, std::mem::take(&mut self.0))
        };
        for (w, c) in small {
            *big.entry(w).or_insert(0) += c;
        }
        TokenCounts(big)
    }

    /// Ranks tokens by frequency (ties lexicographic), removes stopwords,
    /// skips the first `skip_top_k` and keeps the next `capacity`.
    pub fn into_vocabulary(
        self,
        skip_top_k: usize,
        capacity: usize,
        stopwords: Option<&HashSet<String>>,
    ) -> Vocabulary {
        let mut ranked: Vec<(String, u64)> = self
            .0
            .into_iter()
            .filter(|(w, _)| stopwords.is_none_or(|s| !s.contains(w)))
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Vocabulary::from_words(
            ranked.into_iter().skip(skip_top_k).map(|(w, _)| w),
            skip_top_k,
            capacity,
        )
    }
}

/// Builds the vocabulary from token streams.
pub fn build_vocabulary<'a>(
    docs: impl IntoIterator<Item = &'a [String]>,
    skip_top_k: usize,
    capacity: usize,
    stopwords: Option<&HashSet<String>>,
) -> Vocabulary {
    let mut counts = TokenCounts::default();
    for d in docs {
        counts.add(d);
    }
    counts.into_vocabulary(skip_top_k, capacity, stopwords)
}

//! Content-based alignment of multilingual web documents.
//!
//! Documents of one web domain are projected into the TF×IDF space of a
//! pivot language: non-pivot tokens are replaced by their best pivot
//! translation according to a pair of directed lexical translation models,
//! then every document becomes an ℓ2-normalized sparse vector over the pivot
//! vocabulary. Documents are paired by dot product above a threshold under a
//! one-to-one constraint.
//!
//! The crate also carries the URL-matching baseline ([`urlmatch`]), a miner
//! for non-standard URL language identifiers ([`miner`]) and a recall@1
//! evaluation harness ([`eval`]).
//!
//! ```
//! use docalign_core::corpus::tokenize;
//! use docalign_core::vectorspace::{build_vocabulary, compute_idf, vectorize};
//! use docalign_core::cda::score_pair;
//!
//! let docs = vec![tokenize("cat dog bird"), tokenize("cat fish")];
//! let vocab = build_vocabulary(docs.iter().map(Vec::as_slice), 0, 10, None);
//! let idf = compute_idf(docs.iter().map(Vec::as_slice), &vocab).unwrap();
//! let a = vectorize("a", &docs[0], &vocab, &idf);
//! assert!((score_pair(&a, &a) - 1.0).abs() < 1e-9);
//! ```

pub mod cda;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod lexicon;
pub mod miner;
#[cfg(feature = "synthetic")]
pub mod synthetic;
pub mod urlmatch;
pub mod vectorspace;

pub use cda::{AlignmentPair, Matching, Method, ScoreMatrix};
pub use corpus::{CorpusPartition, DocumentRecord};
pub use error::{Error, Result};
pub use lexicon::{LexiconAlignment, TranslationTable};
pub use urlmatch::IdentifierSet;
pub use vectorspace::{IdfModel, SparseVector, Vocabulary};

/// Language tag used when no language could be determined.
pub const UNDETERMINED: &str = "und";

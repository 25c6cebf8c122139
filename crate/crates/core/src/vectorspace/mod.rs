//! Pivot vocabulary, IDF weighting and ℓ2-normalized TF×IDF vectors.

mod idf;
mod io;
mod project;
mod vector;
mod vocab;

pub use idf::{compute_idf, DocFreq, IdfModel};
pub use io::{read_idf, read_vectors, read_vocabulary, write_idf, write_vectors, write_vocabulary};
pub use project::{
    collect_tokens, language_vocabulary, project_corpus, IdfScope, ProjectedCorpus, ProjectionParams,
    VectorIndex,
};
pub use vector::{vectorize, SparseVector};
pub use vocab::{build_vocabulary, TokenCounts, Vocabulary, DEFAULT_CAPACITY, DEFAULT_SKIP_TOP_K};

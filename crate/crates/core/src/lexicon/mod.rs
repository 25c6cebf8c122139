//! Directed lexical translation models and the lexicon alignment set that
//! maps a non-pivot vocabulary onto the pivot vocabulary.

mod alignment;
mod embeddings;
mod table;

pub use alignment::{build_alignment, LexiconAlignment};
pub use embeddings::{table_from_embeddings, EmbeddingTables, Embeddings, DEFAULT_TOP_N};
pub use table::{load_translation_table, TranslationTable};

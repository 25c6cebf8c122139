//! Shared fixtures for the benchmarks: a synthetic corpus carried through
//! vocabulary construction, lexicon alignment and projection.

use std::collections::BTreeMap;

use docalign_core::lexicon::build_alignment;
use docalign_core::synthetic::{generate, SyntheticConfig, Topics};
use docalign_core::vectorspace::{language_vocabulary, project_corpus, ProjectedCorpus, ProjectionParams};
use docalign_core::{CorpusPartition, LexiconAlignment, Vocabulary};

pub struct Fixture {
    pub parts: BTreeMap<String, CorpusPartition>,
    pub params: ProjectionParams,
    pub vocab: Vocabulary,
    pub alignments: BTreeMap<String, LexiconAlignment>,
    pub projected: ProjectedCorpus,
    pub langs: Vec<String>,
}

/// Topic-structured corpus of `domains` × `docs_per_domain` pivot documents,
/// each with one counterpart per language in `langs`.
pub fn fixture(domains: usize, docs_per_domain: usize, langs: &[&str]) -> Fixture {
    let corpus = generate(&SyntheticConfig {
        seed: 11,
        domains,
        pivot_docs_per_domain: docs_per_domain,
        other_langs: langs.iter().map(|l| l.to_string()).collect(),
        doc_len: (80, 200),
        topics: Some(Topics {
            count: 100,
            words_per_topic: 40,
            background_words: 100,
            background_share: 0.5,
        }),
        ..Default::default()
    });
    let parts = corpus.partitions();
    let params = ProjectionParams {
        pivot_lang: corpus.pivot_lang.clone(),
        ..Default::default()
    };
    let vocab = language_vocabulary(&parts, &params.pivot_lang, &params);
    let alignments: BTreeMap<String, LexiconAlignment> = corpus
        .tables
        .iter()
        .map(|(lang, (fwd, bwd))| {
            let other = language_vocabulary(&parts, lang, &params);
            let al = build_alignment(fwd, bwd, &vocab.words, &other.words).expect("synthetic tables are valid");
            (lang.clone(), al)
        })
        .collect();
    let projected = project_corpus(&parts, &alignments, &vocab, &params).expect("synthetic corpus projects");
    Fixture {
        langs: corpus.tables.keys().cloned().collect(),
        parts,
        params,
        vocab,
        alignments,
        projected,
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use super::{vectorize, DocFreq, IdfModel, SparseVector, TokenCounts, Vocabulary};
use super::{DEFAULT_CAPACITY, DEFAULT_SKIP_TOP_K};
use crate::corpus::{CorpusPartition, DocumentRecord};
use crate::error::{Error, Result};
use crate::lexicon::LexiconAlignment;

/// Collection over which document frequencies are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfScope {
    /// All documents of a language across every domain.
    #[default]
    Global,
    /// The documents of a language within one domain.
    PerDomain,
}

#[derive(Debug, Clone)]
pub struct ProjectionParams {
    pub pivot_lang: String,
    pub skip_top_k: usize,
    pub capacity: usize,
    pub stopwords: Option<HashSet<String>>,
    pub idf_scope: IdfScope,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            pivot_lang: "en".into(),
            skip_top_k: DEFAULT_SKIP_TOP_K,
            capacity: DEFAULT_CAPACITY,
            stopwords: None,
            idf_scope: IdfScope::Global,
        }
    }
}

/// Vectors of every projected document, keyed by language then URL.
pub type VectorIndex = BTreeMap<String, BTreeMap<String, SparseVector>>;

#[derive(Debug, Clone)]
pub struct ProjectedCorpus {
    pub pivot_lang: String,
    pub vocab: Vocabulary,
    /// Keyed by `(language, domain)`; the domain is `None` under
    /// [`IdfScope::Global`].
    pub idf: BTreeMap<(String, Option<String>), IdfModel>,
    pub vectors: VectorIndex,
}

/// Token streams of every document in `lang`, in domain then URL order.
pub fn collect_tokens<'a>(
    parts: &'a BTreeMap<String, CorpusPartition>,
    lang: &str,
) -> Vec<&'a [String]> {
    parts
        .values()
        .flat_map(|p| p.docs(lang))
        .map(|d| d.tokens.as_slice())
        .collect()
}

/// Vocabulary of one language over all domains.
pub fn language_vocabulary(
    parts: &BTreeMap<String, CorpusPartition>,
    lang: &str,
    params: &ProjectionParams,
) -> Vocabulary {
    collect_tokens(parts, lang)
        .par_iter()
        .fold(TokenCounts::default, |mut c, t| {
            c.add(t);
            c
        })
        .reduce(TokenCounts::default, TokenCounts::merge)
        .into_vocabulary(params.skip_top_k, params.capacity, params.stopwords.as_ref())
}

/// Maps every document of the pivot language and of each language in
/// `alignments` into the pivot lexicon, then vectorizes it over `vocab` with
/// the IDF of its own (mapped) collection.
pub fn project_corpus(
    parts: &BTreeMap<String, CorpusPartition>,
    alignments: &BTreeMap<String, LexiconAlignment>,
    vocab: &Vocabulary,
    params: &ProjectionParams,
) -> Result<ProjectedCorpus> {
    let pivot = params.pivot_lang.as_str();
    for (lang, al) in alignments {
        if al.other_lang != *lang || al.pivot_lang != pivot {
            return Err(Error::Config(format!(
                "alignment for `{lang}` maps {}→{}, expected {lang}→{pivot}",
                al.other_lang, al.pivot_lang
            )));
        }
    }
    let mut langs: Vec<&str> = vec![pivot];
    langs.extend(alignments.keys().map(String::as_str).filter(|l| *l != pivot));

    let mut out = ProjectedCorpus {
        pivot_lang: pivot.to_string(),
        vocab: vocab.clone(),
        idf: BTreeMap::new(),
        vectors: BTreeMap::new(),
    };
    for lang in langs {
        let mapper = alignments.get(lang).filter(|_| lang != pivot);
        let mapped: Vec<(&str, &DocumentRecord, Vec<String>)> = parts
            .par_iter()
            .flat_map_iter(|(domain, p)| p.docs(lang).iter().map(move |d| (domain.as_str(), d)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(domain, d)| {
                let tokens = match mapper {
                    Some(al) => al.map_tokens(&d.tokens),
                    None => d.tokens.clone(),
                };
                (domain, d, tokens)
            })
            .collect();
        if mapped.is_empty() {
            log::warn!("no `{lang}` documents to project");
            continue;
        }

        let mut groups: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
        for (i, (domain, _, _)) in mapped.iter().enumerate() {
            let key = match params.idf_scope {
                IdfScope::Global => None,
                IdfScope::PerDomain => Some(*domain),
            };
            groups.entry(key).or_default().push(i);
        }
        let mut idf_of: HashMap<Option<&str>, IdfModel> = HashMap::new();
        for (key, members) in &groups {
            let idf = members
                .par_iter()
                .fold(
                    || DocFreq::new(vocab.len()),
                    |mut df, &i| {
                        df.add(&mapped[i].2, vocab);
                        df
                    },
                )
                .reduce(|| DocFreq::new(vocab.len()), DocFreq::merge)
                .finish()?;
            out.idf
                .insert((lang.to_string(), key.map(str::to_string)), idf.clone());
            idf_of.insert(*key, idf);
        }

        let vectors: BTreeMap<String, SparseVector> = mapped
            .par_iter()
            .map(|(domain, d, tokens)| {
                let key = match params.idf_scope {
                    IdfScope::Global => None,
                    IdfScope::PerDomain => Some(*domain),
                };
                (d.url.clone(), vectorize(&d.url, tokens, vocab, &idf_of[&key]))
            })
            .collect();
        out.vectors.insert(lang.to_string(), vectors);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::group_by_domain;
    use crate::lexicon::{build_alignment, TranslationTable};

    fn doc(url: &str, lang: &str, text: &str) -> DocumentRecord {
        DocumentRecord {
            url: url.into(),
            domain: crate::corpus::domain_of(url, Default::default()).unwrap(),
            lang: lang.into(),
            tokens: text.split_whitespace().map(String::from).collect(),
            raw_length: text.len(),
        }
    }

    fn fixture() -> (BTreeMap<String, CorpusPartition>, BTreeMap<String, LexiconAlignment>) {
        let parts = group_by_domain([
            doc("http://a.com/1", "en", "cat dog cat"),
            doc("http://a.com/2", "en", "sun sea"),
            doc("http://a.com/fr/1", "fr", "chat chien chat"),
            doc("http://a.com/fr/2", "fr", "soleil mer inconnu"),
            doc("http://b.com/1", "en", "cat sun"),
        ]);
        let mut f = TranslationTable::new("en", "fr").unwrap();
        let mut b = TranslationTable::new("fr", "en").unwrap();
        for (e, x) in [("cat", "chat"), ("dog", "chien"), ("sun", "soleil"), ("sea", "mer")] {
            f.insert(e, x, 0.9);
            b.insert(x, e, 0.9);
        }
        let params = ProjectionParams { skip_top_k: 0, ..Default::default() };
        let va = language_vocabulary(&parts, "en", &params);
        let vb = language_vocabulary(&parts, "fr", &params);
        let al = build_alignment(&f, &b, &va.words, &vb.words).unwrap();
        (parts, BTreeMap::from([("fr".to_string(), al)]))
    }

    #[test]
    fn mapped_documents_share_pivot_space() {
        let (parts, als) = fixture();
        let params = ProjectionParams { skip_top_k: 0, ..Default::default() };
        let vocab = language_vocabulary(&parts, "en", &params);
        let proj = project_corpus(&parts, &als, &vocab, &params).unwrap();
        let en = &proj.vectors["en"]["http://a.com/1"];
        let fr = &proj.vectors["fr"]["http://a.com/fr/1"];
        assert_eq!(
            en.entries.iter().map(|e| e.0).collect::<Vec<_>>(),
            fr.entries.iter().map(|e| e.0).collect::<Vec<_>>()
        );
        let fr_idf = &proj.idf[&("fr".to_string(), None)];
        assert_eq!(fr_idf.collection_size, 2);
        let en_idf = &proj.idf[&("en".to_string(), None)];
        assert_eq!(en_idf.collection_size, 3);
    }

    #[test]
    fn per_domain_scope() {
        let (parts, als) = fixture();
        let params = ProjectionParams {
            skip_top_k: 0,
            idf_scope: IdfScope::PerDomain,
            ..Default::default()
        };
        let vocab = language_vocabulary(&parts, "en", &params);
        let proj = project_corpus(&parts, &als, &vocab, &params).unwrap();
        assert_eq!(proj.idf[&("en".to_string(), Some("a.com".to_string()))].collection_size, 2);
        assert_eq!(proj.idf[&("en".to_string(), Some("b.com".to_string()))].collection_size, 1);
    }

    #[test]
    fn mismatched_alignment_is_config_error() {
        let (parts, mut als) = fixture();
        let al = als.remove("fr").unwrap();
        als.insert("de".into(), al);
        let vocab = language_vocabulary(&parts, "en", &ProjectionParams::default());
        assert!(matches!(
            project_corpus(&parts, &als, &vocab, &ProjectionParams::default()),
            Err(Error::Config(_))
        ));
    }
}

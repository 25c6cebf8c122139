//! File-level pipeline stages shared by the subcommands and `run`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use docalign_core::cda::{align_corpus_modes, read_pairs, write_pairs, AlignStats};
use docalign_core::corpus::{group_by_domain, read_partitions, DomainMode, Ingestor, RecordFormat};
use docalign_core::eval::{evaluate_recall, GoldSet, RecallReport};
use docalign_core::lexicon::{build_alignment, load_translation_table, table_from_embeddings, Embeddings};
use docalign_core::miner::{mine_identifiers, read_candidates, write_candidates, Candidate};
use docalign_core::urlmatch::{align_urls, UrlStripOptions};
use docalign_core::vectorspace::{
    language_vocabulary, project_corpus, read_vectors, write_idf, write_vectors, write_vocabulary, IdfScope,
    ProjectedCorpus, ProjectionParams, VectorIndex,
};
use docalign_core::{
    AlignmentPair, CorpusPartition, DocumentRecord, Error, IdentifierSet, LexiconAlignment, Matching, SparseVector,
};
use serde::Serialize;

pub type Partitions = BTreeMap<String, CorpusPartition>;

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Writes through `f` into `path`, flushing before returning.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("cannot write {}", path.display()))
}

/// `lang` normalized, or a configuration error naming it.
pub fn lang_tag(lang: &str) -> Result<String> {
    match docalign_core::corpus::normalize_lang_tag(lang) {
        Some(tag) => Ok(tag),
        None => Err(Error::Config(format!("invalid language tag `{lang}`")).into()),
    }
}

/// Normalized, deduplicated languages with the pivot removed.
pub fn other_langs(pivot: &str, langs: &[String]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for l in langs {
        let tag = lang_tag(l)?;
        if tag != pivot && !out.contains(&tag) {
            out.push(tag);
        }
    }
    out.sort();
    Ok(out)
}

// ---- ingest ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IngestOptions {
    pub format: RecordFormat,
    pub domain_mode: DomainMode,
    pub min_confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub lines: usize,
    pub records: usize,
    pub rejected: usize,
    pub detected: usize,
    /// Records replaced by another record with the same URL.
    pub duplicates: usize,
    pub domains: usize,
    pub documents: BTreeMap<String, usize>,
}

/// Ingests every input and groups all records together, so duplicates are
/// resolved across files.
pub fn ingest(inputs: &[PathBuf], opts: &IngestOptions) -> Result<(Partitions, IngestSummary)> {
    let mut ingestor = Ingestor::new(opts.format);
    ingestor.domain_mode = opts.domain_mode;
    ingestor.min_confidence = opts.min_confidence;
    let mut summary = IngestSummary::default();
    let mut records: Vec<DocumentRecord> = Vec::new();
    for path in inputs {
        let (parts, st) = ingestor.ingest_file(path)?;
        summary.lines += st.lines;
        summary.records += st.records;
        summary.rejected += st.rejected;
        summary.detected += st.detected;
        records.extend(parts.into_values().flat_map(|p| p.by_lang.into_values().flatten()));
    }
    let parts = group_by_domain(records);
    for p in parts.values() {
        for (lang, docs) in &p.by_lang {
            *summary.documents.entry(lang.clone()).or_insert(0) += docs.len();
        }
    }
    summary.domains = parts.len();
    summary.duplicates = summary.records - summary.documents.values().sum::<usize>();
    if let Some(n) = summary.documents.get(docalign_core::UNDETERMINED) {
        log::warn!("{n} documents have no identified language");
    }
    Ok((parts, summary))
}

pub fn load_corpus(dir: &Path) -> Result<Partitions> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("corpus directory {} does not exist", dir.display())).into());
    }
    Ok(read_partitions(dir)?)
}

// ---- vocabularies and lexicons ----

/// Reads a stop-word list: one word per line, `#` comments.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct VocabOptions {
    pub capacity: usize,
    pub skip_top_k: usize,
    pub stopwords: BTreeMap<String, HashSet<String>>,
    pub idf_scope: IdfScope,
}

impl VocabOptions {
    /// Projection parameters with the stop words of `lang`.
    pub fn projection(&self, pivot: &str, lang: &str) -> ProjectionParams {
        ProjectionParams {
            pivot_lang: pivot.to_string(),
            skip_top_k: self.skip_top_k,
            capacity: self.capacity,
            stopwords: self.stopwords.get(lang).cloned(),
            idf_scope: self.idf_scope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconSource {
    /// `forward` holds P(other | pivot) rows, `backward` P(pivot | other).
    Tables { forward: PathBuf, backward: PathBuf },
    Embeddings { pivot: PathBuf, other: PathBuf, top_n: usize },
}

impl LexiconSource {
    pub fn files(&self) -> [&Path; 2] {
        match self {
            LexiconSource::Tables { forward, backward } => [forward, backward],
            LexiconSource::Embeddings { pivot, other, .. } => [pivot, other],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexiconSummary {
    pub pivot_vocabulary: usize,
    pub other_vocabulary: usize,
    pub pairs: usize,
    pub mapped_words: usize,
    pub reverse_violations: usize,
}

/// Aligns the vocabulary of `lang` with the pivot vocabulary, both taken
/// from the corpus with the vectorization settings.
pub fn build_lexicon(
    parts: &Partitions,
    pivot: &str,
    lang: &str,
    source: &LexiconSource,
    vocab: &VocabOptions,
) -> Result<(LexiconAlignment, LexiconSummary)> {
    let v_alpha = language_vocabulary(parts, pivot, &vocab.projection(pivot, pivot));
    let v_beta = language_vocabulary(parts, lang, &vocab.projection(pivot, lang));
    for (l, v) in [(pivot, &v_alpha), (lang, &v_beta)] {
        if v.is_empty() {
            bail!("the corpus has no `{l}` vocabulary to align");
        }
    }
    let (fwd, bwd) = match source {
        LexiconSource::Tables { forward, backward } => {
            let fwd = load_translation_table(forward, pivot, lang)?;
            let bwd = load_translation_table(backward, lang, pivot)?;
            for (path, t) in [(forward, &fwd), (backward, &bwd)] {
                let over = t.overfull_rows(1e-6);
                if !over.is_empty() {
                    log::warn!(
                        "{}: {} rows sum above 1, e.g. `{}` ({:.4})",
                        path.display(),
                        over.len(),
                        over[0].0,
                        over[0].1
                    );
                }
            }
            (fwd, bwd)
        }
        LexiconSource::Embeddings { pivot: p, other: o, top_n } => {
            let tables = table_from_embeddings(&Embeddings::load(p)?, &Embeddings::load(o)?, pivot, lang, *top_n)?;
            (tables.forward, tables.backward)
        }
    };
    let al = build_alignment(&fwd, &bwd, &v_alpha.words, &v_beta.words)?;
    let summary = LexiconSummary {
        pivot_vocabulary: v_alpha.len(),
        other_vocabulary: v_beta.len(),
        pairs: al.pairs.len(),
        mapped_words: al.to_pivot.len(),
        reverse_violations: al.reverse_violations,
    };
    Ok((al, summary))
}

pub fn write_lexicon(path: &Path, al: &LexiconAlignment) -> Result<()> {
    write_file(path, |w| al.write_tsv(w))
}

/// Reads `<dir>/<lang>.tsv` for each language.
pub fn load_lexicons(dir: &Path, pivot: &str, langs: &[String]) -> Result<BTreeMap<String, LexiconAlignment>> {
    let mut out = BTreeMap::new();
    for lang in langs {
        let path = dir.join(format!("{lang}.tsv"));
        if !path.is_file() {
            return Err(Error::Config(format!("no lexicon for language `{lang}`: {} is missing", path.display())).into());
        }
        let al = LexiconAlignment::read_tsv(open(&path)?, &path.display().to_string(), pivot, lang)?;
        out.insert(lang.clone(), al);
    }
    Ok(out)
}

// ---- vectors ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorizeSummary {
    pub vocabulary: usize,
    pub idf_models: usize,
    pub documents: BTreeMap<String, usize>,
    /// Documents with no vocabulary word after mapping.
    pub empty_vectors: BTreeMap<String, usize>,
}

pub fn vectorize(
    parts: &Partitions,
    lexicons: &BTreeMap<String, LexiconAlignment>,
    pivot: &str,
    vocab: &VocabOptions,
) -> Result<ProjectedCorpus> {
    let params = vocab.projection(pivot, pivot);
    let v = language_vocabulary(parts, pivot, &params);
    if v.is_empty() {
        bail!("the corpus has no `{pivot}` vocabulary");
    }
    Ok(project_corpus(parts, lexicons, &v, &params)?)
}

/// Layout: `vocab.txt`, `idf/<lang>.tsv` (or `idf/<domain>/<lang>.tsv` per
/// domain) and `docs/<domain>/<lang>.vec` in URL order.
pub fn write_vector_dir(dir: &Path, parts: &Partitions, proj: &ProjectedCorpus) -> Result<VectorizeSummary> {
    write_file(&dir.join("vocab.txt"), |w| write_vocabulary(w, &proj.vocab))?;
    for ((lang, domain), idf) in &proj.idf {
        let path = match domain {
            None => dir.join("idf").join(format!("{lang}.tsv")),
            Some(d) => dir.join("idf").join(d).join(format!("{lang}.tsv")),
        };
        write_file(&path, |w| write_idf(w, &proj.vocab, idf))?;
    }
    let mut summary = VectorizeSummary {
        vocabulary: proj.vocab.len(),
        idf_models: proj.idf.len(),
        documents: BTreeMap::new(),
        empty_vectors: BTreeMap::new(),
    };
    for (domain, part) in parts {
        for (lang, docs) in &part.by_lang {
            let Some(vs) = proj.vectors.get(lang) else { continue };
            let picked: Vec<&SparseVector> = docs.iter().filter_map(|d| vs.get(&d.url)).collect();
            *summary.documents.entry(lang.clone()).or_insert(0) += picked.len();
            *summary.empty_vectors.entry(lang.clone()).or_insert(0) += picked.iter().filter(|v| v.is_empty()).count();
            let path = dir.join("docs").join(domain).join(format!("{lang}.vec"));
            write_file(&path, |w| write_vectors(w, picked.iter().copied()))?;
        }
    }
    Ok(summary)
}

/// Reads the document vectors of a vector directory, with stand-in
/// partitions that list each domain's documents.
pub fn read_vector_dir(dir: &Path) -> Result<(Partitions, VectorIndex)> {
    let docs = dir.join("docs");
    if !docs.is_dir() {
        return Err(Error::Config(format!("{} is not a vector directory", dir.display())).into());
    }
    let mut parts = Partitions::new();
    let mut index = VectorIndex::new();
    let mut domains: Vec<PathBuf> = fs::read_dir(&docs)
        .with_context(|| format!("cannot list {}", docs.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    domains.sort();
    for ddir in domains.into_iter().filter(|p| p.is_dir()) {
        let domain = ddir.file_name().expect("listed entry").to_string_lossy().into_owned();
        let mut part = CorpusPartition::new(domain.clone());
        for entry in fs::read_dir(&ddir).with_context(|| format!("cannot list {}", ddir.display()))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("vec") {
                continue;
            }
            let lang = path.file_stem().expect("has extension").to_string_lossy().into_owned();
            let vectors = read_vectors(open(&path)?, &path.display().to_string())?;
            let mut docs: Vec<DocumentRecord> = vectors
                .iter()
                .map(|v| DocumentRecord {
                    url: v.doc_url.clone(),
                    domain: domain.clone(),
                    lang: lang.clone(),
                    tokens: Vec::new(),
                    raw_length: 0,
                })
                .collect();
            docs.sort_by(|a, b| a.url.cmp(&b.url));
            let slot = index.entry(lang.clone()).or_default();
            for v in vectors {
                slot.insert(v.doc_url.clone(), v);
            }
            part.by_lang.insert(lang, docs);
        }
        parts.insert(domain, part);
    }
    Ok((parts, index))
}

/// Languages present in a vector index, without the pivot.
pub fn index_langs(index: &VectorIndex, pivot: &str) -> Vec<String> {
    index.keys().filter(|l| *l != pivot).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignSummary {
    pub matching: Matching,
    #[serde(flatten)]
    pub stats: AlignStats,
}

/// Aligns a vector directory under each matching mode.
pub fn align_cda(
    vector_dir: &Path,
    pivot: &str,
    langs: Option<&[String]>,
    threshold: f64,
    modes: &[Matching],
) -> Result<Vec<(Vec<AlignmentPair>, AlignSummary)>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Usage(format!("threshold {threshold} outside [0, 1]")).into());
    }
    let (parts, index) = read_vector_dir(vector_dir)?;
    let langs = match langs {
        Some(l) => other_langs(pivot, l)?,
        None => index_langs(&index, pivot),
    };
    let results = align_corpus_modes(&parts, &index, pivot, &langs, threshold, modes)?;
    Ok(results
        .into_iter()
        .zip(modes)
        .map(|((pairs, stats), &matching)| (pairs, AlignSummary { matching, stats }))
        .collect())
}

pub fn write_pairs_file(path: &Path, pairs: &[AlignmentPair]) -> Result<()> {
    write_file(path, |w| write_pairs(w, pairs))
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<AlignmentPair>> {
    Ok(read_pairs(open(path)?, &path.display().to_string())?)
}

/// Pair counts by other language.
pub fn pair_counts(pairs: &[AlignmentPair]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for p in pairs {
        *out.entry(p.other_lang.clone()).or_insert(0) += 1;
    }
    out
}

// ---- URL baseline and mining ----

/// The bundled identifiers extended by the ones in `extra`.
pub fn load_identifiers(extra: Option<&Path>) -> Result<IdentifierSet> {
    let mut ids = IdentifierSet::default();
    if let Some(path) = extra {
        for id in IdentifierSet::load(path)?.sorted() {
            ids.insert(id)?;
        }
    }
    Ok(ids)
}

/// Languages present in a corpus, without the pivot.
pub fn corpus_langs(parts: &Partitions, pivot: &str) -> Vec<String> {
    let mut langs: Vec<String> = parts
        .values()
        .flat_map(|p| p.by_lang.keys())
        .filter(|l| *l != pivot && *l != docalign_core::UNDETERMINED)
        .cloned()
        .collect();
    langs.sort();
    langs.dedup();
    langs
}

pub fn align_url(
    parts: &Partitions,
    pivot: &str,
    langs: &[String],
    ids: &IdentifierSet,
    opts: &UrlStripOptions,
) -> Vec<AlignmentPair> {
    align_urls(parts, pivot, langs, ids, opts)
}

const REVIEW_HEADER: &str = "\
# token_pivot\ttoken_other\tsupport
# Delete or comment out rejected lines, then apply the rest with
# `docalign mine-ids --apply <this file> --ids <identifier file>`.
";

pub fn mine(pairs: &[AlignmentPair], min_support: usize, allow_indel: bool) -> Result<Vec<Candidate>> {
    if min_support == 0 {
        return Err(Error::Usage("min-support must be at least 1".into()).into());
    }
    let cda = pairs.iter().filter(|p| p.method == docalign_core::Method::Cda).count();
    if cda < pairs.len() {
        log::info!("mining ignores {} non-cda pairs", pairs.len() - cda);
    }
    Ok(mine_identifiers(pairs, min_support, allow_indel))
}

/// Writes candidates as a review file for curation.
pub fn write_review(path: &Path, candidates: &[Candidate]) -> Result<()> {
    write_file(path, |w| {
        w.write_all(REVIEW_HEADER.as_bytes())?;
        write_candidates(w, candidates)
    })
}

/// Appends the tokens of every remaining review line to `ids_path` unless
/// the bundled set or the file already has them. Returns the new tokens.
pub fn apply_review(review: &Path, ids_path: &Path) -> Result<Vec<String>> {
    let approved = read_candidates(open(review)?, &review.display().to_string())?;
    let existing = if ids_path.exists() {
        load_identifiers(Some(ids_path))?
    } else {
        IdentifierSet::default()
    };
    let mut check = IdentifierSet::empty();
    let mut added = Vec::new();
    for c in &approved {
        for token in [&c.token_pivot, &c.token_other] {
            let token = token.trim().to_lowercase();
            if token.is_empty() || existing.contains(&token) || added.contains(&token) {
                continue;
            }
            check.insert(&token)?;
            added.push(token);
        }
    }
    if added.is_empty() {
        return Ok(added);
    }
    let mut text = match fs::read_to_string(ids_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(e).with_context(|| format!("cannot read {}", ids_path.display())),
    };
    if !text.is_empty() && !text.ends_with('\n') {
        text.push('\n');
    }
    for t in &added {
        text.push_str(t);
        text.push('\n');
    }
    fs::write(ids_path, text).with_context(|| format!("cannot write {}", ids_path.display()))?;
    Ok(added)
}

// ---- evaluation ----

pub fn load_gold(path: &Path, mode: DomainMode) -> Result<GoldSet> {
    Ok(GoldSet::parse(open(path)?, &path.display().to_string(), mode)?)
}

/// One report per labelled prediction set.
pub fn evaluate(
    preds: &[(String, Vec<AlignmentPair>)],
    gold: &GoldSet,
    refilter: bool,
) -> Result<BTreeMap<String, RecallReport>> {
    let mut out = BTreeMap::new();
    for (label, pairs) in preds {
        out.insert(label.clone(), evaluate_recall(pairs, gold, refilter)?);
    }
    Ok(out)
}

pub fn report_text(reports: &BTreeMap<String, RecallReport>) -> String {
    let mut out = String::new();
    for (label, r) in reports {
        out.push_str(&format!("== {label} ==\n{r}\n"));
    }
    out
}

pub fn report_json(reports: &BTreeMap<String, RecallReport>) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

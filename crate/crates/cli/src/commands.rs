use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use docalign_core::corpus::{DomainMode, RecordFormat};
use docalign_core::lexicon::DEFAULT_TOP_N;
use docalign_core::urlmatch::UrlStripOptions;
use docalign_core::vectorspace::{IdfScope, DEFAULT_CAPACITY, DEFAULT_SKIP_TOP_K};
use docalign_core::Matching;

use crate::config::{Overrides, RunConfig};
use crate::stages::{self, LexiconSource, VocabOptions};
use crate::{pipeline, UsageError};

#[derive(Debug, Parser)]
#[command(name = "docalign", version, about = "Align multilingual web documents within web domains")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DOCALIGN_WORKERS")]
    pub workers: Option<usize>,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, clean, tokenize and partition input records by domain.
    Ingest(IngestCmd),
    /// Build the word alignment between one language and the pivot.
    BuildLexicon(LexiconCmd),
    /// Project documents into the pivot TF-IDF space.
    Vectorize(VectorizeCmd),
    /// Align documents by vector similarity under the one-to-one rule.
    AlignCda(AlignCdaCmd),
    /// Align documents whose URLs match after stripping language identifiers.
    AlignUrl(AlignUrlCmd),
    /// Mine candidate URL language identifiers, or apply a reviewed list.
    MineIds(MineCmd),
    /// Recall of predicted pairs against gold pairs.
    Evaluate(EvaluateCmd),
    /// Run the full pipeline from a configuration file.
    Run(RunCmd),
}

fn parse_domain_mode(s: &str) -> Result<DomainMode, String> {
    match s {
        "host" => Ok(DomainMode::Host),
        "registrable" => Ok(DomainMode::Registrable),
        _ => Err("expected host or registrable".into()),
    }
}

fn parse_idf_scope(s: &str) -> Result<IdfScope, String> {
    match s {
        "global" => Ok(IdfScope::Global),
        "per-domain" => Ok(IdfScope::PerDomain),
        _ => Err("expected global or per-domain".into()),
    }
}

fn parse_stopwords(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((lang, path)) if !lang.is_empty() && !path.is_empty() => Ok((lang.to_string(), path.into())),
        _ => Err("expected LANG=PATH".into()),
    }
}

#[derive(Debug, Args)]
pub struct IngestCmd {
    /// Input record file; repeat for several.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "jsonl")]
    format: RecordFormat,
    /// Output directory, one subdirectory per domain.
    #[arg(long)]
    out: PathBuf,
    /// Minimum detector confidence for records without a language tag.
    #[arg(long, default_value_t = 0.5)]
    lang_confidence: f64,
    #[arg(long, default_value = "host", value_parser = parse_domain_mode)]
    domain_mode: DomainMode,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_SKIP_TOP_K)]
    skip_top_k: usize,
    /// Stop-word file for a language; repeatable.
    #[arg(long, value_name = "LANG=PATH", value_parser = parse_stopwords)]
    stopwords: Vec<(String, PathBuf)>,
}

impl VocabArgs {
    fn options(&self, idf_scope: IdfScope) -> Result<VocabOptions> {
        if self.vocab_size == 0 {
            return Err(UsageError("--vocab-size must be positive".into()).into());
        }
        let mut stopwords = BTreeMap::new();
        for (lang, path) in &self.stopwords {
            stopwords.insert(stages::lang_tag(lang)?, stages::load_stopwords(path)?);
        }
        Ok(VocabOptions {
            capacity: self.vocab_size,
            skip_top_k: self.skip_top_k,
            stopwords,
            idf_scope,
        })
    }
}

#[derive(Debug, Args)]
pub struct LexiconCmd {
    /// Ingested corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "en")]
    pivot: String,
    #[arg(long)]
    lang: String,
    /// Table of P(other | pivot) rows: `pivot_word \t other_word \t prob`.
    #[arg(long, requires = "backward", conflicts_with_all = ["embeddings_pivot", "embeddings_other"])]
    forward: Option<PathBuf>,
    /// Table of P(pivot | other) rows: `other_word \t pivot_word \t prob`.
    #[arg(long, requires = "forward")]
    backward: Option<PathBuf>,
    #[arg(long, requires = "embeddings_other")]
    embeddings_pivot: Option<PathBuf>,
    #[arg(long, requires = "embeddings_pivot")]
    embeddings_other: Option<PathBuf>,
    /// Neighbours kept per word when deriving tables from embeddings.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Output alignment TSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VectorizeCmd {
    #[arg(long)]
    corpus: PathBuf,
    /// Directory holding `<lang>.tsv` alignments.
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, default_value = "en")]
    pivot: String,
    /// Languages to project besides the pivot (default: all with a lexicon
    /// file).
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<String>>,
    #[command(flatten)]
    vocab: VocabArgs,
    #[arg(long, default_value = "global", value_parser = parse_idf_scope)]
    idf_scope: IdfScope,
    /// Output vector directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignCdaCmd {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long, default_value = "en")]
    pivot: String,
    /// Languages to align (default: all in the vector directory).
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<String>>,
    #[arg(long, default_value_t = docalign_core::cda::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "greedy")]
    matching: Matching,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignUrlCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "en")]
    pivot: String,
    /// Languages to align (default: all in the corpus).
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<String>>,
    /// Identifiers added to the bundled list.
    #[arg(long)]
    ids: Option<PathBuf>,
    /// Leave query values untouched.
    #[arg(long)]
    keep_query: bool,
    /// Also strip identifiers that form whole host labels.
    #[arg(long)]
    strip_host: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineCmd {
    /// Aligned pairs; only content-based pairs are mined.
    #[arg(long, required_unless_present = "apply", conflicts_with = "apply")]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    min_support: usize,
    /// Only consider substitutions, not inserted or deleted tokens.
    #[arg(long)]
    no_indel: bool,
    /// Review file of candidates.
    #[arg(long, required_unless_present = "apply")]
    out: Option<PathBuf>,
    /// Append the tokens of a reviewed candidate file to `--ids`.
    #[arg(long, requires = "ids")]
    apply: Option<PathBuf>,
    #[arg(long)]
    ids: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    /// Predicted pairs; repeat to compare several files.
    #[arg(long, required = true)]
    pred: Vec<PathBuf>,
    /// Gold pairs: `pivot_url \t other_url [\t other_lang]`.
    #[arg(long)]
    gold: PathBuf,
    /// Compare predictions as given, without the one-to-one re-filter.
    #[arg(long)]
    no_refilter: bool,
    #[arg(long, default_value = "host", value_parser = parse_domain_mode)]
    domain_mode: DomainMode,
    /// Also write the reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pivot: Option<String>,
    #[arg(long, value_delimiter = ',')]
    langs: Option<Vec<String>>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    skip_top_k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    matching: Option<Matching>,
    #[arg(long, value_parser = parse_idf_scope)]
    idf_scope: Option<IdfScope>,
    #[arg(long)]
    min_support: Option<usize>,
}

fn pivot_tag(pivot: &str) -> Result<String> {
    stages::lang_tag(pivot)
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(c) => {
            if !(0.0..=1.0).contains(&c.lang_confidence) {
                return Err(UsageError("--lang-confidence must lie in [0, 1]".into()).into());
            }
            let opts = stages::IngestOptions {
                format: c.format,
                domain_mode: c.domain_mode,
                min_confidence: c.lang_confidence,
            };
            let (parts, summary) = stages::ingest(&c.input, &opts)?;
            docalign_core::corpus::write_partitions(&c.out, &parts)?;
            print_summary(&summary)
        }
        Command::BuildLexicon(c) => {
            let pivot = pivot_tag(&c.pivot)?;
            let lang = stages::lang_tag(&c.lang)?;
            let source = match (c.forward, c.backward, c.embeddings_pivot, c.embeddings_other) {
                (Some(forward), Some(backward), None, None) => LexiconSource::Tables { forward, backward },
                (None, None, Some(pivot), Some(other)) => LexiconSource::Embeddings {
                    pivot,
                    other,
                    top_n: c.top_n,
                },
                _ => {
                    return Err(UsageError(
                        "give --forward and --backward, or --embeddings-pivot and --embeddings-other".into(),
                    )
                    .into())
                }
            };
            let parts = stages::load_corpus(&c.corpus)?;
            let vocab = c.vocab.options(IdfScope::Global)?;
            let (al, summary) = stages::build_lexicon(&parts, &pivot, &lang, &source, &vocab)?;
            stages::write_lexicon(&c.out, &al)?;
            print_summary(&summary)
        }
        Command::Vectorize(c) => {
            let pivot = pivot_tag(&c.pivot)?;
            let langs = match &c.langs {
                Some(l) => stages::other_langs(&pivot, l)?,
                None => lexicon_langs(&c.lexicon, &pivot)?,
            };
            let parts = stages::load_corpus(&c.corpus)?;
            let lexicons = stages::load_lexicons(&c.lexicon, &pivot, &langs)?;
            let vocab = c.vocab.options(c.idf_scope)?;
            let proj = stages::vectorize(&parts, &lexicons, &pivot, &vocab)?;
            let summary = stages::write_vector_dir(&c.out, &parts, &proj)?;
            print_summary(&summary)
        }
        Command::AlignCda(c) => {
            let pivot = pivot_tag(&c.pivot)?;
            let mut results = stages::align_cda(&c.vectors, &pivot, c.langs.as_deref(), c.threshold, &[c.matching])?;
            let (pairs, summary) = results.pop().expect("one matching mode");
            stages::write_pairs_file(&c.out, &pairs)?;
            print_summary(&summary)
        }
        Command::AlignUrl(c) => {
            let pivot = pivot_tag(&c.pivot)?;
            let parts = stages::load_corpus(&c.corpus)?;
            let langs = match &c.langs {
                Some(l) => stages::other_langs(&pivot, l)?,
                None => stages::corpus_langs(&parts, &pivot),
            };
            let ids = stages::load_identifiers(c.ids.as_deref())?;
            let opts = UrlStripOptions {
                query_values: !c.keep_query,
                host_labels: c.strip_host,
            };
            let pairs = stages::align_url(&parts, &pivot, &langs, &ids, &opts);
            stages::write_pairs_file(&c.out, &pairs)?;
            print_summary(&serde_json::json!({ "pairs": stages::pair_counts(&pairs) }))
        }
        Command::MineIds(c) => {
            if let Some(review) = &c.apply {
                let ids = c.ids.as_deref().expect("clap requires --ids with --apply");
                let added = stages::apply_review(review, ids)?;
                return print_summary(&serde_json::json!({ "added": added }));
            }
            let (Some(pairs), Some(out)) = (&c.pairs, &c.out) else {
                return Err(UsageError("--pairs and --out are required".into()).into());
            };
            let pairs = stages::read_pairs_file(pairs)?;
            let cands = stages::mine(&pairs, c.min_support, !c.no_indel)?;
            stages::write_review(out, &cands)?;
            print_summary(&serde_json::json!({ "candidates": cands.len() }))
        }
        Command::Evaluate(c) => {
            let gold = stages::load_gold(&c.gold, c.domain_mode)?;
            let preds = c
                .pred
                .iter()
                .map(|p| Ok((p.display().to_string(), stages::read_pairs_file(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let reports = stages::evaluate(&preds, &gold, !c.no_refilter)?;
            if let Some(path) = &c.json {
                stages::write_file(path, |w| w.write_all(stages::report_json(&reports).as_bytes()))?;
            }
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(stages::report_text(&reports).as_bytes())?;
            Ok(())
        }
        Command::Run(c) => {
            let mut cfg = RunConfig::load(&c.config)?;
            cfg.apply(&Overrides {
                pivot: c.pivot,
                langs: c.langs,
                vocab_size: c.vocab_size,
                skip_top_k: c.skip_top_k,
                threshold: c.threshold,
                matching: c.matching,
                idf_scope: c.idf_scope,
                min_support: c.min_support,
            });
            let base = c.config.parent().unwrap_or(Path::new("."));
            let resolved = cfg.resolve(base, c.out.as_deref())?;
            let manifest = pipeline::run_pipeline(&resolved)?;
            let digest = crate::stamp::file_digest(&resolved.out_dir.join(pipeline::MANIFEST))?;
            log::info!("manifest sha256 {digest}");
            println!("{}", resolved.out_dir.join(pipeline::MANIFEST).display());
            for st in &manifest.stages {
                println!("{}\t{}", st.stage, serde_json::to_string(&st.summary)?);
            }
            Ok(())
        }
    }
}

/// Languages with an alignment file in a lexicon directory.
fn lexicon_langs(dir: &Path, pivot: &str) -> Result<Vec<String>> {
    let mut langs = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("tsv") {
            langs.push(path.file_stem().expect("has extension").to_string_lossy().into_owned());
        }
    }
    stages::other_langs(pivot, &langs)
}

fn print_summary<S: serde::Serialize>(summary: &S) -> Result<()> {
    println!("{}", serde_json::to_string(summary)?);
    Ok(())
}

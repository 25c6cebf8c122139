//! The `run` pipeline: ingest, lexicon, vectorize, align, mine, evaluate.
//!
//! Each stage is keyed by a digest of its parameters and input digests. A
//! stage whose key matches its stamp and whose outputs still hash to the
//! stamped digests is skipped. Every stage reads its inputs back from disk,
//! so the artifacts named in the manifest are exactly what later stages saw.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use docalign_core::urlmatch::UrlStripOptions;
use docalign_core::Matching;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Params, Resolved};
use crate::stages;
use crate::stamp::{file_digest, sha256_hex, StageRecord, Stamps};

pub const CORPUS: &str = "corpus";
pub const LEXICON: &str = "lexicon";
pub const VECTORS: &str = "vectors";
pub const PAIRS: &str = "pairs.tsv";
pub const URL_PAIRS: &str = "pairs.url.tsv";
pub const CANDIDATES: &str = "candidates.tsv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const MANIFEST: &str = "manifest.json";

pub fn mode_pairs_file(mode: Matching) -> String {
    format!("pairs.{mode}.tsv")
}

/// Everything needed to re-derive the artifacts of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub pivot: String,
    pub langs: Vec<String>,
    pub format: docalign_core::corpus::RecordFormat,
    pub params: Params,
    pub lexicon: BTreeMap<String, crate::config::LexiconConfig>,
    /// As-written path to content digest for every input and resource.
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
}

struct Runner<'a> {
    stamps: Stamps,
    out: &'a Path,
    records: Vec<StageRecord>,
}

impl Runner<'_> {
    fn stage<S: Serialize>(
        &mut self,
        name: &str,
        material: Value,
        outputs: &[&str],
        run: impl FnOnce(&Path) -> Result<S>,
    ) -> Result<StageRecord> {
        let key = sha256_hex(
            &serde_json::to_vec(&json!({
                "stage": name,
                "version": env!("CARGO_PKG_VERSION"),
                "inputs": material,
            }))
            .expect("json serializes"),
        );
        if let Some(rec) = self.stamps.fresh(name, &key, outputs)? {
            log::info!("stage {name}: up to date, skipped");
            self.records.push(rec.clone());
            return Ok(rec);
        }
        self.stamps.begin(name, outputs)?;
        let started = std::time::Instant::now();
        let summary = match run(self.out) {
            Ok(s) => serde_json::to_value(s).expect("summary serializes"),
            Err(e) => {
                let e = e.context(format!("stage {name} failed"));
                self.stamps.fail(name, &e);
                return Err(e);
            }
        };
        let rec = StageRecord {
            stage: name.to_string(),
            key,
            outputs: self.stamps.outputs(outputs)?,
            summary,
        };
        self.stamps.commit(&rec)?;
        log::info!("stage {name}: done in {:.2?}", started.elapsed());
        self.records.push(rec.clone());
        Ok(rec)
    }
}

/// Digests of every input named by the configuration.
fn input_digests(r: &Resolved) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut add = |written: &str, path: &Path| -> Result<()> {
        out.insert(written.to_string(), file_digest(path)?);
        Ok(())
    };
    for (w, p) in &r.inputs {
        add(w, p)?;
    }
    for (w, p) in r.gold.iter().chain(&r.identifiers).chain(r.stopwords.values()) {
        add(w, p)?;
    }
    for (lang, lc) in &r.config.lexicon {
        let written = [&lc.forward, &lc.backward, &lc.embeddings_pivot, &lc.embeddings_other];
        let Some(source) = stages::lang_tag(lang).ok().and_then(|t| r.lexicons.get(&t)) else {
            continue;
        };
        for (w, p) in written.into_iter().flatten().zip(source.files()) {
            add(w, p)?;
        }
    }
    Ok(out)
}

/// Runs every stage in order and writes `manifest.json`.
pub fn run_pipeline(r: &Resolved) -> Result<Manifest> {
    let out = r.out_dir.as_path();
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let cfg = &r.config;
    let params = &cfg.params;
    let pivot = cfg.pivot.as_str();
    let langs = &r.langs;
    let inputs = input_digests(r)?;
    let digest = |written: &str| inputs[written].clone();
    let mut runner = Runner {
        stamps: Stamps::new(out),
        out,
        records: Vec::new(),
    };

    let ingest_opts = r.ingest_options();
    let corpus = runner.stage(
        "ingest",
        json!({
            "inputs": r.inputs.iter().map(|(w, _)| digest(w)).collect::<Vec<_>>(),
            "options": ingest_opts,
        }),
        &[CORPUS],
        |out| {
            let paths: Vec<_> = r.inputs.iter().map(|(_, p)| p.clone()).collect();
            let (parts, summary) = stages::ingest(&paths, &ingest_opts)?;
            docalign_core::corpus::write_partitions(&out.join(CORPUS), &parts)?;
            Ok(summary)
        },
    )?;

    let stopword_digests: BTreeMap<&String, String> =
        r.stopwords.iter().map(|(l, (w, _))| (l, digest(w))).collect();
    let vocab_material = json!({
        "vocab_size": params.vocab_size,
        "skip_top_k": params.skip_top_k,
        "stopwords": stopword_digests,
    });
    let lexicon_material: BTreeMap<&String, Value> = r
        .lexicons
        .iter()
        .map(|(lang, src)| {
            let files: Vec<String> = src.files().iter().map(|p| file_digest(p)).collect::<Result<_>>()?;
            let top_n = match src {
                stages::LexiconSource::Embeddings { top_n, .. } => Some(*top_n),
                stages::LexiconSource::Tables { .. } => None,
            };
            Ok((lang, json!({"files": files, "top_n": top_n})))
        })
        .collect::<Result<_>>()?;
    let vocab = r.vocab_options()?;
    let lexicon = runner.stage(
        "lexicon",
        json!({
            "corpus": corpus.outputs_digest(),
            "pivot": pivot,
            "resources": lexicon_material,
            "vocabulary": vocab_material,
        }),
        &[LEXICON],
        |out| {
            let parts = stages::load_corpus(&out.join(CORPUS))?;
            let mut summary = BTreeMap::new();
            for (lang, source) in &r.lexicons {
                let (al, s) = stages::build_lexicon(&parts, pivot, lang, source, &vocab)
                    .with_context(|| format!("lexicon for `{lang}`"))?;
                stages::write_lexicon(&out.join(LEXICON).join(format!("{lang}.tsv")), &al)?;
                summary.insert(lang.clone(), s);
            }
            Ok(summary)
        },
    )?;

    let vectors = runner.stage(
        "vectorize",
        json!({
            "corpus": corpus.outputs_digest(),
            "lexicon": lexicon.outputs_digest(),
            "pivot": pivot,
            "langs": langs,
            "vocabulary": vocab_material,
            "idf_scope": params.idf_scope,
        }),
        &[VECTORS],
        |out| {
            let parts = stages::load_corpus(&out.join(CORPUS))?;
            let lexicons = stages::load_lexicons(&out.join(LEXICON), pivot, langs)?;
            let proj = stages::vectorize(&parts, &lexicons, pivot, &vocab)?;
            stages::write_vector_dir(&out.join(VECTORS), &parts, &proj)
        },
    )?;

    let mode_files: Vec<String> = Matching::ALL.iter().map(|&m| mode_pairs_file(m)).collect();
    let mut cda_outputs: Vec<&str> = vec![PAIRS];
    cda_outputs.extend(mode_files.iter().map(String::as_str));
    let cda = runner.stage(
        "align-cda",
        json!({
            "vectors": vectors.outputs_digest(),
            "pivot": pivot,
            "langs": langs,
            "threshold": params.threshold,
            "matching": params.matching,
        }),
        &cda_outputs,
        |out| {
            let results = stages::align_cda(&out.join(VECTORS), pivot, Some(langs), params.threshold, &Matching::ALL)?;
            let mut summary = Vec::new();
            for (pairs, s) in &results {
                stages::write_pairs_file(&out.join(mode_pairs_file(s.matching)), pairs)?;
                if s.matching == params.matching {
                    stages::write_pairs_file(&out.join(PAIRS), pairs)?;
                }
                summary.push(s.clone());
            }
            Ok(summary)
        },
    )?;

    let strip = UrlStripOptions {
        query_values: params.query_values,
        host_labels: params.strip_host,
    };
    let ids_digest = r.identifiers.as_ref().map(|(w, _)| digest(w));
    let url = runner.stage(
        "align-url",
        json!({
            "corpus": corpus.outputs_digest(),
            "pivot": pivot,
            "langs": langs,
            "identifiers": ids_digest,
            "query_values": strip.query_values,
            "strip_host": strip.host_labels,
        }),
        &[URL_PAIRS],
        |out| {
            let parts = stages::load_corpus(&out.join(CORPUS))?;
            let ids = stages::load_identifiers(r.identifiers.as_ref().map(|(_, p)| p.as_path()))?;
            let pairs = stages::align_url(&parts, pivot, langs, &ids, &strip);
            stages::write_pairs_file(&out.join(URL_PAIRS), &pairs)?;
            Ok(json!({"pairs": stages::pair_counts(&pairs)}))
        },
    )?;

    runner.stage(
        "mine",
        json!({
            "pairs": cda.outputs.get(PAIRS),
            "min_support": params.min_support,
            "allow_indel": params.allow_indel,
        }),
        &[CANDIDATES],
        |out| {
            let pairs = stages::read_pairs_file(&out.join(PAIRS))?;
            let cands = stages::mine(&pairs, params.min_support, params.allow_indel)?;
            stages::write_review(&out.join(CANDIDATES), &cands)?;
            Ok(json!({"candidates": cands.len()}))
        },
    )?;

    if let Some((gold_written, gold_path)) = &r.gold {
        runner.stage(
            "evaluate",
            json!({
                "cda": cda.outputs_digest(),
                "url": url.outputs_digest(),
                "gold": digest(gold_written),
                "domain_mode": params.domain_mode,
            }),
            &[REPORT_JSON, REPORT_TXT],
            |out| {
                let gold = stages::load_gold(gold_path, params.domain_mode)?;
                let mut preds = vec![("cda".to_string(), stages::read_pairs_file(&out.join(PAIRS))?)];
                for &m in &Matching::ALL {
                    let pairs = stages::read_pairs_file(&out.join(mode_pairs_file(m)))?;
                    preds.push((format!("cda.{m}"), pairs));
                }
                preds.push(("url".to_string(), stages::read_pairs_file(&out.join(URL_PAIRS))?));
                let reports = stages::evaluate(&preds, &gold, true)?;
                stages::write_file(&out.join(REPORT_JSON), |w| w.write_all(stages::report_json(&reports).as_bytes()))?;
                stages::write_file(&out.join(REPORT_TXT), |w| w.write_all(stages::report_text(&reports).as_bytes()))?;
                Ok(reports.into_iter().map(|(k, v)| (k, v.recall)).collect::<BTreeMap<_, _>>())
            },
        )?;
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        pivot: pivot.to_string(),
        langs: langs.clone(),
        format: cfg.format,
        params: params.clone(),
        lexicon: cfg.lexicon.clone(),
        inputs,
        stages: runner.records,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out.join(MANIFEST), text).with_context(|| format!("cannot write {}", out.join(MANIFEST).display()))?;
    Ok(manifest)
}

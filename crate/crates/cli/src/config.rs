//! Declarative run configuration. Relative paths resolve against the
//! directory of the configuration file; the manifest records them as written.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use docalign_core::corpus::{DomainMode, RecordFormat};
use docalign_core::lexicon::DEFAULT_TOP_N;
use docalign_core::vectorspace::{IdfScope, DEFAULT_CAPACITY, DEFAULT_SKIP_TOP_K};
use docalign_core::{Error, Matching};
use serde::{Deserialize, Serialize};

use crate::stages::{lang_tag, load_stopwords, IngestOptions, LexiconSource, VocabOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub vocab_size: usize,
    pub skip_top_k: usize,
    pub threshold: f64,
    pub matching: Matching,
    pub idf_scope: IdfScope,
    pub domain_mode: DomainMode,
    pub min_confidence: f64,
    pub min_support: usize,
    pub allow_indel: bool,
    /// Strip identifiers from query values as well as the path.
    pub query_values: bool,
    pub strip_host: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            vocab_size: DEFAULT_CAPACITY,
            skip_top_k: DEFAULT_SKIP_TOP_K,
            threshold: docalign_core::cda::DEFAULT_THRESHOLD,
            matching: Matching::Greedy,
            idf_scope: IdfScope::Global,
            domain_mode: DomainMode::Host,
            min_confidence: 0.5,
            min_support: 3,
            allow_indel: true,
            query_values: true,
            strip_host: false,
        }
    }
}

/// Per-language lexical resource: either both translation tables or both
/// embedding files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings_pivot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings_other: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    #[serde(default)]
    pub format: RecordFormat,
    pub pivot: String,
    pub langs: Vec<String>,
    pub out_dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    /// Extra URL identifiers on top of the bundled list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiers: Option<String>,
    /// Stop-word file per language.
    #[serde(default)]
    pub stopwords: BTreeMap<String, String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub lexicon: BTreeMap<String, LexiconConfig>,
}

/// Command-line values that replace configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub pivot: Option<String>,
    pub langs: Option<Vec<String>>,
    pub vocab_size: Option<usize>,
    pub skip_top_k: Option<usize>,
    pub threshold: Option<f64>,
    pub matching: Option<Matching>,
    pub idf_scope: Option<IdfScope>,
    pub min_support: Option<usize>,
}

/// A checked configuration with absolute resource paths.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    /// As-written path and resolved path of each input file.
    pub inputs: Vec<(String, PathBuf)>,
    pub gold: Option<(String, PathBuf)>,
    pub identifiers: Option<(String, PathBuf)>,
    pub stopwords: BTreeMap<String, (String, PathBuf)>,
    pub lexicons: BTreeMap<String, LexiconSource>,
    /// Languages other than the pivot, normalized and sorted.
    pub langs: Vec<String>,
}

fn config_err(msg: String) -> anyhow::Error {
    Error::Config(msg).into()
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(format!("{source}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.pivot {
            self.pivot = p.clone();
        }
        if let Some(l) = &o.langs {
            self.langs = l.clone();
        }
        let p = &mut self.params;
        if let Some(v) = o.vocab_size {
            p.vocab_size = v;
        }
        if let Some(v) = o.skip_top_k {
            p.skip_top_k = v;
        }
        if let Some(v) = o.threshold {
            p.threshold = v;
        }
        if let Some(v) = o.matching {
            p.matching = v;
        }
        if let Some(v) = o.idf_scope {
            p.idf_scope = v;
        }
        if let Some(v) = o.min_support {
            p.min_support = v;
        }
    }

    /// Checks every parameter and resource without touching the output
    /// directory. Errors name the offending language or file.
    pub fn resolve(mut self, base: &Path, out_override: Option<&Path>) -> Result<Resolved> {
        let p = &self.params;
        if p.vocab_size == 0 {
            return Err(config_err("vocab_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p.threshold) {
            return Err(config_err(format!("threshold {} outside [0, 1]", p.threshold)));
        }
        if !(0.0..=1.0).contains(&p.min_confidence) {
            return Err(config_err(format!("min_confidence {} outside [0, 1]", p.min_confidence)));
        }
        if p.min_support == 0 {
            return Err(config_err("min_support must be at least 1".into()));
        }
        self.pivot = lang_tag(&self.pivot)?;
        let mut langs = Vec::new();
        for l in &self.langs {
            let tag = lang_tag(l)?;
            if tag == self.pivot {
                return Err(config_err(format!("`{tag}` is the pivot and cannot also be aligned")));
            }
            if !langs.contains(&tag) {
                langs.push(tag);
            }
        }
        langs.sort();
        if langs.is_empty() {
            return Err(config_err("no languages to align".into()));
        }

        let file = |what: &str, written: &str| -> Result<(String, PathBuf)> {
            let path = base.join(written);
            if path.is_file() {
                Ok((written.to_string(), path))
            } else {
                Err(config_err(format!("{what} {} does not exist", path.display())))
            }
        };
        if self.inputs.is_empty() {
            return Err(config_err("no input files".into()));
        }
        let inputs = self
            .inputs
            .iter()
            .map(|i| file("input", i))
            .collect::<Result<Vec<_>>>()?;
        let gold = self.gold.as_deref().map(|g| file("gold file", g)).transpose()?;
        let identifiers = self
            .identifiers
            .as_deref()
            .map(|i| file("identifier file", i))
            .transpose()?;
        let mut stopwords = BTreeMap::new();
        for (lang, path) in &self.stopwords {
            let tag = lang_tag(lang)?;
            stopwords.insert(tag.clone(), file(&format!("stop-word file for `{tag}`"), path)?);
        }

        let mut by_tag: BTreeMap<String, &LexiconConfig> = BTreeMap::new();
        for (lang, lc) in &self.lexicon {
            by_tag.insert(lang_tag(lang)?, lc);
        }
        let mut lexicons = BTreeMap::new();
        for lang in &langs {
            let Some(lc) = by_tag.remove(lang) else {
                return Err(config_err(format!("missing lexicon resource for language `{lang}`")));
            };
            let res = |what: &str, written: &str| file(&format!("{what} for language `{lang}`:"), written);
            let source = match lc {
                LexiconConfig { forward: Some(f), backward: Some(b), embeddings_pivot: None, embeddings_other: None, top_n: None } => {
                    LexiconSource::Tables {
                        forward: res("forward table", f)?.1,
                        backward: res("backward table", b)?.1,
                    }
                }
                LexiconConfig { forward: None, backward: None, embeddings_pivot: Some(p), embeddings_other: Some(o), top_n } => {
                    let top_n = top_n.unwrap_or(DEFAULT_TOP_N);
                    if top_n == 0 {
                        return Err(config_err(format!("top_n for language `{lang}` must be positive")));
                    }
                    LexiconSource::Embeddings {
                        pivot: res("pivot embeddings", p)?.1,
                        other: res("other embeddings", o)?.1,
                        top_n,
                    }
                }
                _ => {
                    return Err(config_err(format!(
                        "lexicon resource for language `{lang}` needs forward and backward tables, \
                         or embeddings_pivot and embeddings_other"
                    )))
                }
            };
            lexicons.insert(lang.clone(), source);
        }
        for lang in by_tag.keys() {
            log::warn!("ignoring lexicon resource for unconfigured language `{lang}`");
        }

        let out_dir = match out_override {
            Some(o) => o.to_path_buf(),
            None => base.join(&self.out_dir),
        };
        self.langs = langs.clone();
        Ok(Resolved {
            config: self,
            out_dir,
            inputs,
            gold,
            identifiers,
            stopwords,
            lexicons,
            langs,
        })
    }
}

impl Resolved {
    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            format: self.config.format,
            domain_mode: self.config.params.domain_mode,
            min_confidence: self.config.params.min_confidence,
        }
    }

    pub fn vocab_options(&self) -> Result<VocabOptions> {
        let mut stopwords: BTreeMap<String, HashSet<String>> = BTreeMap::new();
        for (lang, (_, path)) in &self.stopwords {
            stopwords.insert(
                lang.clone(),
                load_stopwords(path).with_context(|| format!("stop words for `{lang}`"))?,
            );
        }
        Ok(VocabOptions {
            capacity: self.config.params.vocab_size,
            skip_top_k: self.config.params.skip_top_k,
            stopwords,
            idf_scope: self.config.params.idf_scope,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    const CONFIG: &str = r#"
inputs = ["docs.jsonl"]
pivot = "en"
langs = ["fr", "DE"]
out_dir = "out"

[params]
vocab_size = 1000
matching = "top1-then-greedy"

[lexicon.fr]
forward = "en-fr.tsv"
backward = "fr-en.tsv"

[lexicon.de]
embeddings_pivot = "en.vec"
embeddings_other = "de.vec"
"#;

    fn workspace() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for f in ["docs.jsonl", "en-fr.tsv", "fr-en.tsv", "en.vec", "de.vec"] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        dir
    }

    #[test]
    fn parses_and_resolves() {
        let dir = workspace();
        let cfg = RunConfig::parse(CONFIG, "c").unwrap();
        assert_eq!(cfg.params.matching, Matching::Top1ThenGreedy);
        assert_eq!(cfg.params.skip_top_k, 100);
        assert_eq!(cfg.format, RecordFormat::JsonLines);
        let r = cfg.resolve(dir.path(), None).unwrap();
        assert_eq!(r.langs, ["de", "fr"]);
        assert_eq!(r.out_dir, dir.path().join("out"));
        assert!(matches!(r.lexicons["de"], LexiconSource::Embeddings { top_n: 20, .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("inputs = []\nbogus = 1\n", "c").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn missing_resource_names_the_language() {
        let dir = workspace();
        fs::remove_file(dir.path().join("de.vec")).unwrap();
        let err = RunConfig::parse(CONFIG, "c").unwrap().resolve(dir.path(), None).unwrap_err();
        assert!(err.to_string().contains("`de`"), "{err}");
        assert!(!dir.path().join("out").exists());

        let mut cfg = RunConfig::parse(CONFIG, "c").unwrap();
        cfg.langs.push("cs".into());
        let err = cfg.resolve(dir.path(), None).unwrap_err();
        assert!(err.to_string().contains("`cs`"), "{err}");
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RunConfig::parse(CONFIG, "c").unwrap();
        cfg.apply(&Overrides {
            threshold: Some(0.3),
            langs: Some(vec!["fr".into()]),
            ..Default::default()
        });
        assert_eq!(cfg.params.threshold, 0.3);
        assert_eq!(cfg.resolve(workspace().path(), None).unwrap().langs, ["fr"]);
    }
}

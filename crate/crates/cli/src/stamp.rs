//! Content digests, per-stage stamps and failure markers.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

const STAMP_DIR: &str = ".stamps";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let file = fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader
            .read(&mut buf)
            .with_context(|| format!("cannot read {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Digest of every regular file under `rel` (a file or directory relative to
/// `root`), keyed by `/`-separated path relative to `root`. Missing paths
/// contribute nothing.
pub fn tree_digests(root: &Path, rel: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let start = root.join(rel);
    if !start.exists() {
        return Ok(out);
    }
    for entry in WalkDir::new(&start).sort_by_file_name() {
        let entry = entry.with_context(|| format!("cannot walk {}", start.display()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let key = path
            .strip_prefix(root)
            .expect("walk stays under root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        out.insert(key, file_digest(path)?);
    }
    Ok(out)
}

/// Single digest standing for a map of digests.
pub fn combined_digest(digests: &BTreeMap<String, String>) -> String {
    sha256_hex(&serde_json::to_vec(digests).expect("string map serializes"))
}

/// What a completed stage leaves behind; also its entry in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Digest of the stage's parameters and input digests.
    pub key: String,
    pub outputs: BTreeMap<String, String>,
    pub summary: serde_json::Value,
}

impl StageRecord {
    pub fn outputs_digest(&self) -> String {
        combined_digest(&self.outputs)
    }
}

/// Stage bookkeeping inside one output directory.
pub struct Stamps {
    root: PathBuf,
}

impl Stamps {
    pub fn new(root: &Path) -> Self {
        Stamps {
            root: root.to_path_buf(),
        }
    }

    fn stamp_path(&self, stage: &str) -> PathBuf {
        self.root.join(STAMP_DIR).join(format!("{stage}.json"))
    }

    pub fn failed_path(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}.FAILED"))
    }

    /// Collects the current digests of a stage's outputs.
    pub fn outputs(&self, outputs: &[&str]) -> Result<BTreeMap<String, String>> {
        let mut all = BTreeMap::new();
        for rel in outputs {
            all.extend(tree_digests(&self.root, rel)?);
        }
        Ok(all)
    }

    /// The stored record when its key matches and the outputs on disk still
    /// hash to what was recorded.
    pub fn fresh(&self, stage: &str, key: &str, outputs: &[&str]) -> Result<Option<StageRecord>> {
        let Ok(text) = fs::read_to_string(self.stamp_path(stage)) else {
            return Ok(None);
        };
        let Ok(record) = serde_json::from_str::<StageRecord>(&text) else {
            log::warn!("ignoring unreadable stamp for stage {stage}");
            return Ok(None);
        };
        if record.key != key || record.outputs.is_empty() {
            return Ok(None);
        }
        Ok((self.outputs(outputs)? == record.outputs).then_some(record))
    }

    /// Clears the stamp, the failure marker and the previous outputs.
    pub fn begin(&self, stage: &str, outputs: &[&str]) -> Result<()> {
        for path in [self.stamp_path(stage), self.failed_path(stage)] {
            remove(&path)?;
        }
        for rel in outputs {
            remove(&self.root.join(rel))?;
        }
        Ok(())
    }

    pub fn commit(&self, record: &StageRecord) -> Result<()> {
        let path = self.stamp_path(&record.stage);
        fs::create_dir_all(path.parent().expect("stamp has a parent"))
            .with_context(|| format!("cannot create {}", path.display()))?;
        let mut text = serde_json::to_string_pretty(record)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    /// Leaves a marker next to the partial outputs of a failed stage.
    pub fn fail(&self, stage: &str, err: &anyhow::Error) {
        let path = self.failed_path(stage);
        if let Err(e) = fs::write(&path, format!("{err:#}\n")) {
            log::error!("cannot write {}: {e}", path.display());
        }
    }
}

fn remove(path: &Path) -> Result<()> {
    let res = if path.is_dir() {
        fs::remove_dir_all(path)
    } else {
        fs::remove_file(path)
    };
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            Err(e).with_context(|| format!("cannot remove {}", path.display()))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tree_digests_are_relative_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("v/b")).unwrap();
        fs::write(dir.path().join("v/b/x.txt"), "abc").unwrap();
        fs::write(dir.path().join("v/a.txt"), "").unwrap();
        let d = tree_digests(dir.path(), "v").unwrap();
        let keys: Vec<&str> = d.keys().map(String::as_str).collect();
        assert_eq!(keys, ["v/a.txt", "v/b/x.txt"]);
        assert_eq!(d["v/b/x.txt"], sha256_hex(b"abc"));
        assert!(tree_digests(dir.path(), "missing").unwrap().is_empty());
    }

    #[test]
    fn stamp_is_fresh_until_outputs_change() {
        let dir = tempfile::tempdir().unwrap();
        let stamps = Stamps::new(dir.path());
        fs::write(dir.path().join("out.tsv"), "1").unwrap();
        let record = StageRecord {
            stage: "s".into(),
            key: "k".into(),
            outputs: stamps.outputs(&["out.tsv"]).unwrap(),
            summary: serde_json::json!({"n": 1}),
        };
        stamps.commit(&record).unwrap();
        assert_eq!(stamps.fresh("s", "k", &["out.tsv"]).unwrap(), Some(record));
        assert_eq!(stamps.fresh("s", "other", &["out.tsv"]).unwrap(), None);
        fs::write(dir.path().join("out.tsv"), "2").unwrap();
        assert_eq!(stamps.fresh("s", "k", &["out.tsv"]).unwrap(), None);
        stamps.begin("s", &["out.tsv"]).unwrap();
        assert!(!dir.path().join("out.tsv").exists());
    }
}

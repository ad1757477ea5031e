//! On-disk workspace: artifacts plus a manifest of their content hashes.
//!
//! Every artifact records the hashes of the artifacts it was computed from,
//! so a reader can tell when an upstream stage has been rerun since.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".newstopics.lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    /// Subcommand that wrote the artifact.
    pub stage: String,
    /// Hashes of the artifacts and external files it was derived from.
    pub inputs: BTreeMap<String, String>,
    /// Canonical JSON of the parameters that shaped it.
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            format: "newstopics-workspace".into(),
            version: 1,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            artifacts: BTreeMap::new(),
        }
    }
}

/// Holds the workspace lock for its lifetime.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    manifest: Manifest,
    lock: PathBuf,
}

/// Subcommand that produces an artifact, for error messages.
pub fn producer(name: &str) -> &'static str {
    match name {
        "corpus.jsonl" | "timeline.csv" | "slices.json" | "stats.json" => "ingest",
        "vocab.json" | "bow.jsonl" => "preprocess",
        n if n.starts_with("models/dtm") => "train --mode dtm",
        n if n.starts_with("models/") => "train --mode static",
        n if n.starts_with("reports/") => "report",
        _ => "plot",
    }
}

impl Workspace {
    /// Opens `root`, creating it when `create` is set, and takes the lock.
    pub fn open(root: &Path, create: bool) -> anyhow::Result<Self> {
        if create {
            fs::create_dir_all(root).with_context(|| format!("creating workspace {}", root.display()))?;
        } else if !root.is_dir() {
            bail!("workspace {} does not exist; run `newstopics ingest` first", root.display());
        }
        let lock = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::AlreadyExists => bail!(
                "workspace {} is locked by another run (remove {} if no run is active)",
                root.display(),
                lock.display()
            ),
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        }
        // From here on Drop releases the lock.
        let mut ws = Workspace {
            root: root.to_path_buf(),
            manifest: Manifest::default(),
            lock,
        };
        let path = root.join(MANIFEST);
        match fs::read_to_string(&path) {
            Ok(text) => {
                ws.manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            Err(e) if e.kind() == ErrorKind::NotFound => {}
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        }
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.manifest.artifacts.contains_key(name)
    }

    /// Reads an artifact after checking that it exists, matches its
    /// recorded hash, and that none of its inputs has changed since.
    pub fn read(&self, name: &str) -> anyhow::Result<Vec<u8>> {
        let entry = self.manifest.artifacts.get(name).ok_or_else(|| {
            anyhow!("missing artifact {name}; run `newstopics {}` first", producer(name))
        })?;
        let path = self.path(name);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => bail!(
                "artifact {} is listed in the manifest but missing; rerun `newstopics {}`",
                path.display(),
                entry.stage
            ),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        if sha256_hex(&bytes) != entry.sha256 {
            bail!(
                "artifact {} was modified after it was written; rerun `newstopics {}`",
                path.display(),
                entry.stage
            );
        }
        for (input, hash) in &entry.inputs {
            if let Some(current) = self.manifest.artifacts.get(input) {
                if &current.sha256 != hash {
                    bail!(
                        "artifact {name} is stale: {input} changed since it was written; rerun `newstopics {}`",
                        entry.stage
                    );
                }
            }
        }
        Ok(bytes)
    }

    pub fn read_string(&self, name: &str) -> anyhow::Result<String> {
        String::from_utf8(self.read(name)?).with_context(|| format!("{name} is not UTF-8"))
    }

    /// Current hash of a recorded artifact, for use as an input.
    pub fn hash_of(&self, name: &str) -> anyhow::Result<String> {
        self.manifest
            .artifacts
            .get(name)
            .map(|e| e.sha256.clone())
            .ok_or_else(|| anyhow!("missing artifact {name}; run `newstopics {}` first", producer(name)))
    }

    /// Writes an artifact and records it. `inputs` maps input names to
    /// their hashes, see [`Workspace::hash_of`].
    pub fn write(
        &mut self,
        name: &str,
        bytes: &[u8],
        stage: &str,
        inputs: BTreeMap<String, String>,
        params: serde_json::Value,
    ) -> anyhow::Result<()> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.artifacts.insert(
            name.to_string(),
            ArtifactEntry {
                sha256: sha256_hex(bytes),
                stage: stage.to_string(),
                inputs,
                params,
            },
        );
        log::debug!("wrote {}", path.display());
        Ok(())
    }

    /// Persists the manifest. Call once a stage has written everything.
    pub fn save(&self) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Checks every recorded artifact against its hash.
    pub fn verify(&self) -> anyhow::Result<()> {
        for name in self.manifest.artifacts.keys() {
            self.read(name)?;
        }
        Ok(())
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path(), true).unwrap();
        let err = Workspace::open(dir.path(), true).unwrap_err();
        assert!(err.to_string().contains("locked"));
        drop(ws);
        assert!(!dir.path().join(LOCK).exists());
        Workspace::open(dir.path(), false).unwrap();
    }

    #[test]
    fn roundtrip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut ws = Workspace::open(dir.path(), true).unwrap();
            ws.write("corpus.jsonl", b"x\n", "ingest", BTreeMap::new(), json!({})).unwrap();
            let h = ws.hash_of("corpus.jsonl").unwrap();
            ws.write("vocab.json", b"{}", "preprocess", inputs(&[("corpus.jsonl", &h)]), json!({}))
                .unwrap();
            ws.save().unwrap();
        }
        let ws = Workspace::open(dir.path(), false).unwrap();
        assert_eq!(ws.read("vocab.json").unwrap(), b"{}");
        ws.verify().unwrap();
        drop(ws);

        fs::write(dir.path().join("corpus.jsonl"), b"y\n").unwrap();
        let ws = Workspace::open(dir.path(), false).unwrap();
        let err = ws.read("corpus.jsonl").unwrap_err().to_string();
        assert!(err.contains("modified") && err.contains("ingest"), "{err}");
    }

    #[test]
    fn stale_and_missing_artifacts_name_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::open(dir.path(), true).unwrap();
        ws.write("corpus.jsonl", b"x\n", "ingest", BTreeMap::new(), json!({})).unwrap();
        let h = ws.hash_of("corpus.jsonl").unwrap();
        ws.write("bow.jsonl", b"b\n", "preprocess", inputs(&[("corpus.jsonl", &h)]), json!({}))
            .unwrap();
        ws.write("corpus.jsonl", b"z\n", "ingest", BTreeMap::new(), json!({})).unwrap();
        let err = ws.read("bow.jsonl").unwrap_err().to_string();
        assert!(err.contains("stale") && err.contains("`newstopics preprocess`"), "{err}");

        let err = ws.read("reports/index.json").unwrap_err().to_string();
        assert!(err.contains("`newstopics report`"), "{err}");
        let err = ws.read("models/dtm_k5.json").unwrap_err().to_string();
        assert!(err.contains("train --mode dtm"), "{err}");

        fs::remove_file(dir.path().join("corpus.jsonl")).unwrap();
        let err = ws.read("corpus.jsonl").unwrap_err().to_string();
        assert!(err.contains("missing") && err.contains("ingest"), "{err}");
    }

    #[test]
    fn opening_absent_workspace_without_create_fails() {
        let dir = tempfile::tempdir().unwrap();
        let err = Workspace::open(&dir.path().join("nope"), false).unwrap_err();
        assert!(err.to_string().contains("ingest"));
    }
}

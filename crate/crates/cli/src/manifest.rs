//! Run manifests: provenance records chaining the commands of a run together.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lapcom::data::{InputFormat, Multiplex};

use crate::error::{CliError, CliResult};

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

/// Digest of the run manifest of an input directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Upstream {
    pub role: String,
    pub dir: PathBuf,
    pub command: String,
    pub manifest_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config_digest: Option<String>,
    pub data_digest: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub data_format: Option<InputFormat>,
    pub data_directed: Option<bool>,
    pub upstream: Vec<Upstream>,
    pub artifacts: Vec<Artifact>,
    pub elapsed_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            config_digest: None,
            data_digest: None,
            data_dir: None,
            data_format: None,
            data_directed: None,
            upstream: Vec::new(),
            artifacts: Vec::new(),
            elapsed_secs: 0.0,
        }
    }

    /// Hashes every file under `dir` except the manifest itself and records it.
    pub fn collect_artifacts(&mut self, dir: &Path) -> CliResult<()> {
        let mut files = Vec::new();
        walk(dir, dir, &mut files)?;
        files.sort();
        self.artifacts = files
            .into_iter()
            .filter(|rel| rel != RUN_MANIFEST)
            .map(|rel| Ok(Artifact { sha256: file_digest(&dir.join(&rel))?, path: rel }))
            .collect::<CliResult<_>>()?;
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::write(dir.join(RUN_MANIFEST), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> CliResult<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("under root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    Ok(bytes_digest(&fs::read(path)?))
}

/// Content digest of a multiplex, independent of its on-disk format.
pub fn multiplex_digest(mx: &Multiplex) -> String {
    let mut h = Sha256::new();
    h.update((mx.n_nodes() as u64).to_le_bytes());
    h.update([u8::from(mx.is_directed())]);
    h.update(mx.family().link_name().as_bytes());
    for (label, net) in mx.labels().iter().zip(mx.networks()) {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        for w in net.weights() {
            h.update(w.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

pub fn config_digest<T: Serialize>(cfg: &T) -> CliResult<String> {
    Ok(bytes_digest(serde_json::to_string(cfg)?.as_bytes()))
}

/// Loads the manifest of `dir` and checks every recorded artifact digest.
pub fn load_verified(dir: &Path) -> CliResult<RunManifest> {
    let path = dir.join(RUN_MANIFEST);
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
    for a in &m.artifacts {
        let actual = file_digest(&dir.join(&a.path))?;
        if actual != a.sha256 {
            return Err(CliError::Digest(format!("{} changed since {} wrote it", dir.join(&a.path).display(), m.command)));
        }
    }
    Ok(m)
}

/// Upstream record for `dir` when it carries a manifest.
pub fn upstream(role: &str, dir: &Path) -> CliResult<Option<Upstream>> {
    let path = dir.join(RUN_MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let m = load_verified(dir)?;
    Ok(Some(Upstream {
        role: role.to_string(),
        dir: dir.to_path_buf(),
        command: m.command,
        manifest_sha256: file_digest(&path)?,
    }))
}

//! Run manifests: every command records its inputs, outputs, and flags
//! with content digests so runs can be compared and reproduced.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub flags: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_utterances: Option<usize>,
    pub duration_ms: u128,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot digest {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digests(paths: &[&Path]) -> Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Collects everything a manifest needs over the lifetime of one command.
pub struct ManifestBuilder {
    command: &'static str,
    flags: serde_json::Value,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    skipped_utterances: Option<usize>,
}

impl ManifestBuilder {
    pub fn new(command: &'static str, flags: &impl Serialize) -> Self {
        ManifestBuilder {
            command,
            flags: serde_json::to_value(flags).expect("flags serialize"),
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            skipped_utterances: None,
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn input_opt(&mut self, path: &Option<PathBuf>) {
        if let Some(p) = path {
            self.inputs.push(p.clone());
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn skipped(&mut self, count: usize) {
        self.skipped_utterances = Some(count);
    }

    /// Digest all recorded files and write the manifest next to the run's
    /// primary output.
    pub fn write(self, manifest_path: &Path) -> Result<()> {
        let inputs: Vec<&Path> = self.inputs.iter().map(PathBuf::as_path).collect();
        let outputs: Vec<&Path> = self.outputs.iter().map(PathBuf::as_path).collect();
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            flags: self.flags,
            inputs: digests(&inputs)?,
            outputs: digests(&outputs)?,
            skipped_utterances: self.skipped_utterances,
            duration_ms: self.started.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialize");
        std::fs::write(manifest_path, text + "\n")
            .with_context(|| format!("cannot write {}", manifest_path.display()))?;
        Ok(())
    }
}

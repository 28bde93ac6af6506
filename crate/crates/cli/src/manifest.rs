//! Provenance records written next to every command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vgr_core::data::SCHEMA_VERSION;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the output directory when the file lives inside it.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub schema: u32,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn digest(root: &Path, path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let shown = path.strip_prefix(root).unwrap_or(path);
    Ok(FileDigest {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Collects the files a command read and wrote.
pub struct Recorder {
    root: PathBuf,
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(root: &Path, command: &'static str) -> Self {
        Recorder {
            root: root.to_path_buf(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Writes `<command>.manifest.json` into the output directory.
    pub fn finish(self, seed: u64, config: &impl Serialize) -> Result<PathBuf, CliError> {
        let collect = |paths: &[PathBuf]| -> Result<Vec<FileDigest>, CliError> {
            paths.iter().map(|p| digest(&self.root, p)).collect()
        };
        let manifest = Manifest {
            command: self.command.to_string(),
            schema: SCHEMA_VERSION,
            seed,
            config: serde_json::to_value(config)?,
            inputs: collect(&self.inputs)?,
            outputs: collect(&self.outputs)?,
        };
        let path = self.root.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

//! Run manifests: a reproducibility record written beside every command's
//! outputs.
//!
//! A manifest pins the command, its full configuration, the seed, and the
//! content hash of every input and output file. Two runs with identical
//! manifests produce byte-identical outputs, so manifests deliberately
//! contain nothing volatile; wall-clock timing goes to the log instead.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// File identity: base name plus content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileStamp {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn stamp_file(path: &Path) -> io::Result<FileStamp> {
    let bytes = std::fs::read(path)?;
    Ok(FileStamp {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()),
        sha256: sha256_hex(&bytes),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// Full parsed configuration of the subcommand.
    pub config: serde_json::Value,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            status: "ok".into(),
            error: None,
        }
    }

    pub fn stamp_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.push(stamp_file(path)?);
        Ok(())
    }

    /// Stamps an output if it exists; missing outputs are fine on failed
    /// runs (the manifest is written even then).
    pub fn stamp_output(&mut self, path: &Path) {
        if let Ok(stamp) = stamp_file(path) {
            self.outputs.push(stamp);
        }
    }

    pub fn mark_error(&mut self, message: &str) {
        self.status = "error".into();
        self.error = Some(message.to_string());
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        crate::jsonl::write_atomic(path, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifests_hash_files_and_serialize_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        std::fs::write(&input, b"{}\n").unwrap();

        let mut m = RunManifest::new("demo", 7, serde_json::json!({"flag": true}));
        m.stamp_input(&input).unwrap();
        m.stamp_output(&dir.path().join("missing.json"));
        assert!(m.outputs.is_empty());

        let path_a = dir.path().join("a.manifest.json");
        let path_b = dir.path().join("b.manifest.json");
        m.write_to(&path_a).unwrap();
        m.write_to(&path_b).unwrap();
        assert_eq!(std::fs::read(path_a).unwrap(), std::fs::read(path_b).unwrap());
        assert_eq!(m.inputs[0].name, "in.jsonl");
        assert_eq!(m.inputs[0].sha256.len(), 64);
    }

    #[test]
    fn error_state_is_recorded() {
        let mut m = RunManifest::new("demo", 0, serde_json::Value::Null);
        m.mark_error("boom");
        assert_eq!(m.status, "error");
        assert_eq!(m.error.as_deref(), Some("boom"));
    }
}

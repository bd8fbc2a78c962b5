use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command_line: Vec<String>,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn new(command_line: &[String], config_path: &Path, config_text: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: command_line.to_vec(),
            config_path: config_path.display().to_string(),
            config_sha256: sha256_hex(config_text),
            seed: None,
            trials: None,
            threads: None,
            outputs: Vec::new(),
            duration_seconds: 0.0,
        }
    }

    /// `<dir>/<stem>.manifest.json` for a primary output `<dir>/<stem>.<ext>`.
    pub fn path_for(output: &Path) -> PathBuf {
        sibling(output, "", "manifest.json")
    }

    pub fn finish(mut self, outputs: &[PathBuf], elapsed: Duration) -> Self {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        self.duration_seconds = elapsed.as_secs_f64();
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// `<dir>/<stem><suffix>.<ext>` next to `path`.
pub fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_hex() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sibling_paths() {
        let p = Path::new("out/fig2.csv");
        assert_eq!(
            RunManifest::path_for(p),
            Path::new("out/fig2.manifest.json")
        );
        assert_eq!(
            sibling(p, "_optimal", "csv"),
            Path::new("out/fig2_optimal.csv")
        );
    }
}

//! Per-command run manifest written next to the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounters {
    pub detected: u64,
    pub decoded: u64,
    /// Decoded frames dropped by the MAC allowlist.
    pub filtered: u64,
    pub stored: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// Fully resolved configuration.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub elapsed_s: f64,
    pub counters: ManifestCounters,
    /// Command-specific details.
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.into(),
            config_path: None,
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            elapsed_s: 0.0,
            counters: ManifestCounters::default(),
            details: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(CliError::internal)?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// `out.jsonl` -> `out.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

use crate::Command;
use anyhow::Context;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const FILE_NAME: &str = "manifest.json";

/// Written beside every output; holds enough to repeat the run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &Command, outputs: &[&Path]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.clone(),
            outputs: outputs
                .iter()
                .map(|p| p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()))
                .collect(),
        }
    }

    /// Writes `manifest.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(FILE_NAME);
        let body = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

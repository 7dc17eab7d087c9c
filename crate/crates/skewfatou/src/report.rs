//! JSON output: per-stage reports plus a run manifest listing every file a
//! command produced.
//!
//! Stage reports contain only deterministic quantities so reruns are
//! byte-identical; wall-clock time lives in the manifest alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Record of one CLI invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<String>,
    /// Parameters after merging config file and flags, stringified.
    pub parameters: BTreeMap<String, String>,
    /// Every file the run wrote, relative to the output directory.
    pub outputs: Vec<String>,
    pub precision_bits: u32,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config_path: None,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            precision_bits: 0,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path_name(path));
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

fn path_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Serialize with a stable field order and a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

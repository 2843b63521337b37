//! Run manifest: tool version, echoed configuration, timestamps, and a
//! checksum for every file the command emitted.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Normalized flat-text config (simulate); re-parses to the config the
    /// run actually used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    /// Echoed command-line arguments for commands without a config file.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub args: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
    /// `file name -> sha256:<hex>` for every emitted file.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "tandem",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: None,
            config: None,
            args: BTreeMap::new(),
            started_at: now(),
            finished_at: String::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_output(&mut self, dir: &Path, name: &str) -> Result<(), String> {
        let digest = sha256_file(&dir.join(name))?;
        self.outputs.insert(name.to_string(), digest);
        Ok(())
    }

    /// Stamps the end time and writes `manifest.json` into `dir`.
    pub fn write(mut self, dir: &Path) -> Result<(), String> {
        self.finished_at = now();
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self)
            .map_err(|e| format!("cannot serialize manifest: {e}"))?;
        fs::write(&path, json + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn sha256_file(path: &Path) -> Result<String, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

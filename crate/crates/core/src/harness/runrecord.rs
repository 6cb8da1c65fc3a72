//! Per-run provenance records.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// What ran, from which config, when, and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub kind: String,
    pub config_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<String>,
    pub version: String,
}

impl RunRecord {
    /// Allocates the next free `run-NNNN` id in `out_dir`.
    pub fn allocate_id(out_dir: &Path) -> Result<String> {
        let mut max = 0u32;
        if out_dir.exists() {
            for entry in fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))? {
                let entry = entry.map_err(|e| Error::io(out_dir, e))?;
                let name = entry.file_name();
                let name = name.to_string_lossy();
                if let Some(rest) = name.strip_prefix("run-") {
                    if let Some(num) = rest.strip_suffix(".json") {
                        if let Ok(n) = num.parse::<u32>() {
                            max = max.max(n);
                        }
                    }
                }
            }
        }
        Ok(format!("run-{:04}", max + 1))
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let path = out_dir.join(format!("{}.json", self.run_id));
        let json = serde_json::to_string_pretty(self).expect("record serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// SHA-256 of the canonical config text, hex-encoded.
pub fn config_hash(config_toml: &str) -> String {
    let digest = Sha256::digest(config_toml.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.json";

/// Provenance record written next to every set of outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the resolved configuration (compact JSON).
    pub config_hash: String,
    pub config: serde_json::Value,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<PathBuf>,
}

pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{:02x}", b)).collect()
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, started: DateTime<Utc>, outputs: Vec<PathBuf>) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash(&config),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: stamp(started),
            finished: stamp(Utc::now()),
            outputs,
        }
    }

    /// Writes `manifest.json` into `dir`, replacing any earlier one.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(FILE_NAME);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_depends_only_on_config() {
        let a = config_hash(&json!({"alpha": 2.0, "n": 8}));
        let b = config_hash(&json!({"alpha": 2.0, "n": 8}));
        let c = config_hash(&json!({"alpha": 2.5, "n": 8}));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}

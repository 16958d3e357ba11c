//! Per-run manifest: the exact configuration, a hash of it, and the list of
//! produced files with their hashes, so a run can be checked for
//! reproducibility.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub created_unix: u64,
    pub wall_clock_seconds: f64,
    pub config_hash: String,
    /// The full configuration text the run used.
    pub config: String,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub fnv64: String,
}

/// FNV-1a, 64-bit.
pub fn fnv64(data: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in data {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub struct ManifestBuilder {
    command: String,
    config_text: String,
    started: std::time::Instant,
    outputs: Vec<OutputRecord>,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_text: &str) -> Self {
        Self {
            command: command.to_string(),
            config_text: config_text.to_string(),
            started: std::time::Instant::now(),
            outputs: Vec::new(),
        }
    }

    /// Records a file that the run produced (hashes its current content).
    pub fn record(&mut self, path: &Path) -> Result<()> {
        let data =
            std::fs::read(path).with_context(|| format!("hashing output {}", path.display()))?;
        self.outputs.push(OutputRecord {
            path: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            bytes: data.len() as u64,
            fnv64: format!("{:016x}", fnv64(&data)),
        });
        Ok(())
    }

    pub fn write(self, dir: &Path) -> Result<PathBuf> {
        let manifest = Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            config_hash: format!("{:016x}", fnv64(self.config_text.as_bytes())),
            config: self.config_text,
            outputs: self.outputs,
        };
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_manifest(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    #[test]
    fn fnv_known_values() {
        // standard FNV-1a test vectors
        assert_eq!(fnv64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = std::env::temp_dir().join("tatrec-manifest-test");
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("data.bin");
        std::fs::write(&out, b"payload").unwrap();
        let mut b = ManifestBuilder::new("simulate", "key = 1\n");
        b.record(&out).unwrap();
        let path = b.write(&dir).unwrap();
        let m = read_manifest(&path).unwrap();
        assert_eq!(m.command, "simulate");
        assert_eq!(m.config, "key = 1\n");
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.outputs[0].bytes, 7);
        assert_eq!(m.config_hash.len(), 16);
    }
}

//! Output staging and the run manifest. Files are tracked as they are
//! written; a failed run removes its partial outputs so no half-finished
//! artifacts survive.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub struct OutputSink {
    dir: PathBuf,
    written: Vec<(String, String)>, // (filename, sha256)
}

impl OutputSink {
    pub fn create(dir: &Path) -> std::io::Result<OutputSink> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputSink { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents.as_bytes())?;
        self.written.push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    /// Remove everything written so far (called on error).
    pub fn discard(&mut self) {
        for (name, _) in self.written.drain(..) {
            let _ = std::fs::remove_file(self.dir.join(name));
        }
    }

    /// Write `manifest.json` and finish the run.
    pub fn finish(mut self, config_bytes: &[u8], seed: u64) -> std::io::Result<()> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex::encode(Sha256::digest(config_bytes)),
            seed,
            timestamp_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: self.written.iter().cloned().collect(),
        };
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(self.dir.join("manifest.json"), body)?;
        self.written.clear();
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool_version: &'static str,
    config_sha256: String,
    seed: u64,
    timestamp_unix_s: u64,
    outputs: BTreeMap<String, String>,
}

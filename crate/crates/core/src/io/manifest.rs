use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Hex SHA-256 of a byte string.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the defaults-filled config as written by the tool.
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    /// RFC 3339, UTC. The only field that differs between identical reruns.
    pub timestamp: String,
    pub outputs: Vec<String>,
}

/// An output directory that records every file written to it and finishes
/// with a single manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    outputs: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Writes one file through `fill`, buffered, and records its name.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.root.join(name))?);
        fill(&mut w)?;
        w.flush()?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(())
    }

    /// Writes `manifest.json`, replacing any earlier one.
    pub fn finish(self, command: &str, config_digest: &str, seed: u64) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_digest: config_digest.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.root.join(MANIFEST_FILE), text + "\n")?;
        Ok(manifest)
    }
}

//! Run manifests: every command writes a JSON record of its resolved
//! parameters, input hashes, outputs, and timings next to its outputs, and
//! any manifest can be re-executed into a fresh directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use voxel2vec_core::volume::write_atomic;
use voxel2vec_core::Error;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand name; `params` holds that command's resolved parameters.
    pub command: String,
    pub seed: u64,
    /// True when the run used a single writer thread end to end.
    pub deterministic: bool,
    pub params: serde_json::Value,
    /// sha256 of every input file consumed, keyed by absolute path.
    pub input_hashes: BTreeMap<String, String>,
    /// Output files, relative to the out directory.
    pub outputs: Vec<String>,
    pub timings_seconds: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, deterministic: bool, params: serde_json::Value) -> Self {
        RunManifest {
            tool: "voxel2vec".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            deterministic,
            params,
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            timings_seconds: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), Error> {
        let abs = path
            .canonicalize()
            .map_err(|e| Error::io(path, e))?;
        let bytes = std::fs::read(&abs).map_err(|e| Error::io(&abs, e))?;
        let digest = Sha256::digest(&bytes);
        self.input_hashes
            .insert(abs.display().to_string(), hex::encode(digest));
        Ok(())
    }

    pub fn record_output(&mut self, out_dir: &Path, path: &Path) {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.outputs.push(rel.display().to_string());
    }

    pub fn record_timing(&mut self, stage: &str, seconds: f64) {
        self.timings_seconds.insert(stage.to_string(), seconds);
    }

    /// Write as `<command>.manifest.json` in the out directory.
    pub fn save(&self, out_dir: &Path) -> Result<PathBuf, Error> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    /// Check recorded input hashes against the files on disk.
    pub fn verify_inputs(&self) -> Result<(), Error> {
        for (path, expected) in &self.input_hashes {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            if &digest != expected {
                return Err(Error::Data(format!(
                    "input {path} changed since the recorded run (hash mismatch)"
                )));
            }
        }
        Ok(())
    }
}

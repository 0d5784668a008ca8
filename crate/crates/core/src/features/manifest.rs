use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::Role;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn chunk_file_name(index: usize) -> String {
    format!("chunk-{index:05}.lsf")
}

/// Where the features came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic {
        /// Hex SHA-256 of the canonical spec JSON.
        spec_hash: String,
        spec: serde_json::Value,
    },
    Extraction {
        metadata: serde_json::Value,
    },
    Other {
        note: String,
    },
}

/// Records whose model exited before the last loop step; their remaining
/// slots hold copies of the last produced state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyExitEntry {
    pub prompt_id: String,
    pub role: Role,
    pub true_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkEntry {
    pub file: String,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u16,
    pub split: String,
    pub steps: usize,
    pub dim: usize,
    pub max_len: usize,
    pub chunk_size: usize,
    pub total_pairs: usize,
    pub chunks: Vec<ChunkEntry>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub early_exit: Vec<EarlyExitEntry>,
}

impl DatasetManifest {
    pub fn check_counts(&self) -> Result<()> {
        let sum: usize = self.chunks.iter().map(|c| c.pairs).sum();
        if sum != self.total_pairs {
            return Err(Error::InvalidRecord(format!(
                "manifest total_pairs {} but chunks list {sum}",
                self.total_pairs
            )));
        }
        if let Some(c) = self.chunks.iter().find(|c| c.pairs > self.chunk_size) {
            return Err(Error::InvalidRecord(format!(
                "{} holds {} pairs, above chunk_size {}",
                c.file, c.pairs, self.chunk_size
            )));
        }
        if let Some(e) = self.early_exit.iter().find(|e| e.true_steps == 0 || e.true_steps > self.steps) {
            return Err(Error::InvalidRecord(format!(
                "early-exit entry for {} has true_steps {} outside 1..={}",
                e.prompt_id, e.true_steps, self.steps
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let run = || -> Result<Self> {
            let m: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
            m.check_counts()?;
            Ok(m)
        };
        run().map_err(|e| Error::at(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::at(path, e.into()))
    }
}

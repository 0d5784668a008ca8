use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Provenance of one CLI invocation, one per output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// The parsed arguments.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix_secs: u64,
    pub elapsed_secs: f64,
    pub exit_code: i32,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::at(&path, e.into()))?;
        serde_json::from_str(&text).map_err(|e| Error::at(&path, e.into()))
    }
}

/// Collects manifest fields while a command runs.
pub(crate) struct ManifestBuilder {
    subcommand: String,
    config: serde_json::Value,
    started: SystemTime,
    clock: Instant,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config: serde_json::Value) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config,
            started: SystemTime::now(),
            clock: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
        }
    }

    pub fn write(self, dir: &Path, exit_code: i32) -> Result<PathBuf> {
        let m = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_secs: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_secs: self.clock.elapsed().as_secs_f64(),
            exit_code,
        };
        fs::create_dir_all(dir).map_err(|e| Error::at(dir, e.into()))?;
        let path = dir.join(RUN_MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").map_err(|e| Error::at(&path, e.into()))?;
        Ok(path)
    }
}

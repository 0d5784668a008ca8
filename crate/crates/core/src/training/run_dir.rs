use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::EpochMetrics;
use crate::evaluators::{save_checkpoint, Evaluator};
use crate::{Error, Result};

pub const METRICS_CSV: &str = "metrics.csv";
const METRICS_JSON: &str = "metrics.json";
const CONFIG_JSON: &str = "config.json";
const CHECKPOINT_DIR: &str = "checkpoints";

/// Flat CSV row of [`EpochMetrics`]. Score statistics come from the
/// held-out split when there is one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub loss: f64,
    pub deflated_acc: f64,
    pub fixed_order_train_acc: f64,
    pub fixed_order_acc: Option<f64>,
    pub lr_first: f64,
    pub lr_last: f64,
    pub optimizer_steps: u64,
    pub score_mean: f64,
    pub score_std: f64,
    pub score_min: f64,
    pub score_max: f64,
    pub positive_rate: f64,
}

impl From<&EpochMetrics> for MetricsRow {
    fn from(m: &EpochMetrics) -> Self {
        let s = m.score_stats();
        Self {
            epoch: m.epoch,
            loss: m.mean_loss,
            deflated_acc: m.deflated_acc,
            fixed_order_train_acc: m.fixed_order_train_acc,
            fixed_order_acc: m.fixed_order_acc,
            lr_first: m.lr_first,
            lr_last: m.lr_last,
            optimizer_steps: m.optimizer_steps,
            score_mean: s.mean,
            score_std: s.std,
            score_min: s.min,
            score_max: s.max,
            positive_rate: s.positive_rate,
        }
    }
}

pub fn write_metrics_csv(path: &Path, metrics: &[EpochMetrics]) -> Result<()> {
    let write = || -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        for m in metrics {
            w.serialize(MetricsRow::from(m))?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::at(path, Error::InvalidRecord(e.to_string())))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let read = || -> std::result::Result<Vec<MetricsRow>, csv::Error> {
        csv::Reader::from_path(path)?.deserialize().collect()
    };
    read().map_err(|e| Error::at(path, Error::InvalidRecord(e.to_string())))
}

/// A training run's output directory: the configuration echo, one
/// checkpoint per epoch and the metrics log in CSV and JSON.
#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path, config_echo: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(root.join(CHECKPOINT_DIR)).map_err(|e| Error::at(root, e.into()))?;
        let path = root.join(CONFIG_JSON);
        fs::write(&path, serde_json::to_string_pretty(config_echo)? + "\n").map_err(|e| Error::at(&path, e.into()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.join(CHECKPOINT_DIR).is_dir() {
            return Err(Error::at(root, Error::MissingArtifact("run directory".into())));
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join(CONFIG_JSON)
    }

    pub fn metrics_csv(&self) -> PathBuf {
        self.root.join(METRICS_CSV)
    }

    pub fn checkpoint_path(&self, epoch: usize) -> PathBuf {
        self.root.join(CHECKPOINT_DIR).join(format!("epoch-{epoch:03}.json"))
    }

    /// Writes the epoch's checkpoint and rewrites both metric logs.
    pub fn record_epoch(&self, metrics: &[EpochMetrics], model: &Evaluator<f32>, seed: u64) -> Result<PathBuf> {
        let last = metrics.last().ok_or_else(|| Error::Empty("epoch metrics".into()))?;
        let path = self.checkpoint_path(last.epoch);
        save_checkpoint(&path, model, last.epoch, seed, Some(serde_json::to_value(last)?))?;
        self.write_metrics(metrics)?;
        Ok(path)
    }

    pub fn write_metrics(&self, metrics: &[EpochMetrics]) -> Result<()> {
        write_metrics_csv(&self.metrics_csv(), metrics)?;
        let path = self.root.join(METRICS_JSON);
        fs::write(&path, serde_json::to_string_pretty(metrics)? + "\n").map_err(|e| Error::at(&path, e.into()))
    }

    pub fn load_metrics(&self) -> Result<Vec<EpochMetrics>> {
        let path = self.root.join(METRICS_JSON);
        let text = fs::read_to_string(&path).map_err(|e| Error::at(&path, e.into()))?;
        serde_json::from_str(&text).map_err(|e| Error::at(&path, e.into()))
    }

    /// `(epoch, path)` of every checkpoint, in epoch order.
    pub fn checkpoints(&self) -> Result<Vec<(usize, PathBuf)>> {
        let dir = self.root.join(CHECKPOINT_DIR);
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::at(&dir, e.into()))? {
            let path = entry?.path();
            let epoch = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("epoch-")?.strip_suffix(".json")?.parse().ok());
            if let Some(e) = epoch {
                out.push((e, path));
            }
        }
        out.sort();
        Ok(out)
    }
}

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::flip::{bias_label, flip_report, CorrelationKind, FlipReport};
use crate::evaluators::Evaluator;
use crate::features::PairSource;
use crate::par::par_map;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossEpochRow {
    pub epoch: usize,
    pub fixed_order_acc: f64,
    pub report: FlipReport,
}

impl CrossEpochRow {
    /// Row from stored score vectors; the accuracy is the positive rate of
    /// the normal scores unless given.
    pub fn from_scores(
        epoch: usize,
        fixed_order_acc: Option<f64>,
        normal: &[f64],
        flipped: &[f64],
        kind: CorrelationKind,
    ) -> Result<Self> {
        let report = flip_report(normal, flipped, kind)?;
        let acc =
            fixed_order_acc.unwrap_or_else(|| normal.iter().filter(|s| **s > 0.0).count() as f64 / normal.len() as f64);
        Ok(Self { epoch, fixed_order_acc: acc, report })
    }
}

/// One flip-test row per checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossEpochTable {
    pub rows: Vec<CrossEpochRow>,
}

const HEADER: [&str; 6] = ["Epoch", "Test Acc", "Correlation", "Sign Flip Rate", "Mean Sum", "Bias"];

impl CrossEpochTable {
    fn cells(row: &CrossEpochRow) -> [String; 6] {
        let r = &row.report;
        [
            row.epoch.to_string(),
            format!("{:.1}%", 100.0 * row.fixed_order_acc),
            r.antisym_correlation.map_or("n/a".into(), |c| format!("{c:+.2}")),
            format!("{:.0}%", 100.0 * r.sign_flip_rate),
            format!("{:+.2}", r.mean_sum),
            bias_label(r.mean_sum).to_string(),
        ]
    }

    /// Aligned-column text.
    pub fn to_text(&self) -> String {
        let body: Vec<[String; 6]> = self.rows.iter().map(Self::cells).collect();
        let mut widths = HEADER.map(str::len);
        for cells in &body {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[&str]| {
            let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&HEADER);
        for cells in &body {
            line(&cells.each_ref().map(String::as_str));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let write = || -> std::result::Result<(), csv::Error> {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record([
                "epoch",
                "test_acc",
                "correlation",
                "sign_flip_rate",
                "mean_sum",
                "bias",
                "ties",
                "degenerate",
            ])?;
            for row in &self.rows {
                let r = &row.report;
                w.write_record([
                    row.epoch.to_string(),
                    row.fixed_order_acc.to_string(),
                    r.antisym_correlation.map_or(String::new(), |c| c.to_string()),
                    r.sign_flip_rate.to_string(),
                    r.mean_sum.to_string(),
                    bias_label(r.mean_sum).to_string(),
                    r.ties.to_string(),
                    r.degenerate.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| Error::at(path, Error::InvalidRecord(e.to_string())))
    }
}

/// Flip test and fixed-order accuracy of each `(epoch, model)` over the
/// same pairs.
pub fn cross_epoch_flip(
    checkpoints: &[(usize, &Evaluator<f32>)],
    source: &dyn PairSource,
    kind: CorrelationKind,
) -> Result<CrossEpochTable> {
    if checkpoints.is_empty() {
        return Err(Error::Empty("checkpoint list".into()));
    }
    let pairs = source.load_all()?;
    let mut rows = Vec::with_capacity(checkpoints.len());
    for (epoch, model) in checkpoints {
        if !model.is_pairwise() {
            return Err(Error::Config(format!("epoch {epoch}: the flip test needs a pairwise evaluator")));
        }
        let scored = par_map(&pairs, |p| {
            Ok((model.preference_score(&p.chosen, &p.rejected)?, model.preference_score(&p.rejected, &p.chosen)?))
        })?;
        let (normal, flipped): (Vec<f64>, Vec<f64>) = scored.into_iter().unzip();
        rows.push(CrossEpochRow::from_scores(*epoch, None, &normal, &flipped, kind)?);
    }
    Ok(CrossEpochTable { rows })
}

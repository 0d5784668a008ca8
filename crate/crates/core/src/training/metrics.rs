use serde::{Deserialize, Serialize};

use crate::evaluators::Evaluator;
use crate::features::PairSource;
use crate::par::par_map;
use crate::{Error, Result};

/// Fraction of `sign(score) == target`. A score of exactly zero counts as
/// incorrect for either target, which is what makes a constant-zero scorer
/// read 0% rather than 50%.
pub fn deflated_accuracy(scores: &[f64], targets: &[f64]) -> Result<f64> {
    if scores.len() != targets.len() {
        return Err(Error::shape("targets", scores.len(), targets.len()));
    }
    if scores.is_empty() {
        return Err(Error::Empty("score list".into()));
    }
    let zeros = scores.iter().filter(|s| **s == 0.0).count();
    if zeros > 0 {
        log::debug!("{zeros} zero scores counted as incorrect");
    }
    let correct = scores.iter().zip(targets).filter(|(s, t)| **s != 0.0 && s.signum() == t.signum()).count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Summary of a score distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub positive_rate: f64,
}

impl ScoreStats {
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("score list".into()));
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            n: scores.len(),
            mean,
            std: var.sqrt(),
            min: scores.iter().copied().fold(f64::INFINITY, f64::min),
            max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            positive_rate: scores.iter().filter(|s| **s > 0.0).count() as f64 / n,
        })
    }
}

/// Accuracy with the chosen response always presented first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedOrderReport {
    pub accuracy: f64,
    pub stats: ScoreStats,
}

/// Eval-mode scores of `(chosen, rejected)` for every pair, in source order.
pub fn fixed_order_scores(model: &Evaluator<f32>, source: &dyn PairSource) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(source.total_pairs());
    for i in 0..source.num_chunks() {
        out.extend(par_map(&source.load_chunk(i)?, |p| model.preference_score(&p.chosen, &p.rejected))?);
    }
    Ok(out)
}

/// Fixed-order accuracy: the fraction of pairs scored strictly positive.
pub fn fixed_order_eval(model: &Evaluator<f32>, source: &dyn PairSource) -> Result<FixedOrderReport> {
    let scores = fixed_order_scores(model, source)?;
    let stats = ScoreStats::from_scores(&scores)?;
    Ok(FixedOrderReport { accuracy: stats.positive_rate, stats })
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Swap-protocol training accuracy, accumulated over the epoch's batches
    /// in training mode. For pointwise losses: fraction with `s_c > s_r`.
    pub deflated_acc: f64,
    /// Eval-mode fixed-order accuracy on the training split after the epoch.
    pub fixed_order_train_acc: f64,
    /// Eval-mode fixed-order accuracy on the held-out split, if one was given.
    pub fixed_order_acc: Option<f64>,
    pub lr_first: f64,
    pub lr_last: f64,
    pub optimizer_steps: u64,
    pub train_stats: ScoreStats,
    pub eval_stats: Option<ScoreStats>,
}

impl EpochMetrics {
    /// Held-out score stats when available, else training.
    pub fn score_stats(&self) -> &ScoreStats {
        self.eval_stats.as_ref().unwrap_or(&self.train_stats)
    }
}

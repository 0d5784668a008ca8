use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LossKind {
    /// Random argument swap with target ±1, `-log σ(t·s) + λ·s²`.
    PairwiseSwap,
    /// Chosen always first, target +1, no score penalty. Collapses to a
    /// constant positive scorer.
    PairwiseFixedNoReg,
    /// Bradley-Terry `-log σ(s_c - s_r)` on two pointwise scores.
    PointwiseRanking,
    /// Ranking term plus binary cross-entropy on each score.
    Calibrated,
}

impl LossKind {
    pub fn is_pairwise(self) -> bool {
        matches!(self, LossKind::PairwiseSwap | LossKind::PairwiseFixedNoReg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_max: f64,
    pub lr_min: f64,
    pub warmup_steps: u64,
    pub batch_size: usize,
    /// Batches accumulated per optimizer step.
    pub grad_accum_steps: usize,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub swap_prob: f64,
    pub l2_score_coeff: f64,
    /// Overrides the architecture's dropout rate when it has one.
    pub dropout_rate: f64,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_max: 1e-4,
            lr_min: 1e-6,
            warmup_steps: 200,
            batch_size: 32,
            grad_accum_steps: 1,
            weight_decay: 0.01,
            clip_norm: 1.0,
            epochs: 5,
            swap_prob: 0.5,
            l2_score_coeff: 1e-4,
            dropout_rate: 0.1,
            seed: 0,
            loss: LossKind::PairwiseSwap,
        }
    }
}

impl TrainConfig {
    /// Settings for small synthetic datasets: a larger learning rate and a
    /// warmup of a tenth of the run, since the full-scale 200-step warmup
    /// would exceed the whole run.
    pub fn desk(train_pairs: usize, epochs: usize) -> Self {
        let base = Self { lr_max: 3e-3, lr_min: 3e-5, epochs, ..Self::default() };
        let total = base.total_steps(train_pairs);
        Self { warmup_steps: (total / 10).max(1).min(total.saturating_sub(1)), ..base }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 || self.grad_accum_steps == 0 {
            return bad("batch_size and grad_accum_steps must be positive".into());
        }
        if !(self.lr_max >= self.lr_min && self.lr_min >= 0.0 && self.lr_max.is_finite()) {
            return bad(format!("need lr_max >= lr_min >= 0, got {} / {}", self.lr_max, self.lr_min));
        }
        if !(0.0..=1.0).contains(&self.swap_prob) {
            return bad(format!("swap_prob must be in [0, 1], got {}", self.swap_prob));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.clip_norm > 0.0) {
            return bad(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        if !(self.weight_decay >= 0.0 && self.l2_score_coeff >= 0.0) {
            return bad("weight_decay and l2_score_coeff must be >= 0".into());
        }
        Ok(())
    }

    pub fn updates_per_epoch(&self, train_pairs: usize) -> u64 {
        let batches = train_pairs.div_ceil(self.batch_size);
        batches.div_ceil(self.grad_accum_steps) as u64
    }

    pub fn total_steps(&self, train_pairs: usize) -> u64 {
        self.epochs as u64 * self.updates_per_epoch(train_pairs)
    }
}

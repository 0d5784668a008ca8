use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear warmup from 0 to `lr_max` over `warmup_steps`, then cosine
/// annealing from `lr_max` down to `lr_min` at `total_steps`.
///
/// `step` is clamped to `total_steps`.
pub fn cosine_warmup_lr(step: u64, total_steps: u64, warmup_steps: u64, lr_max: f64, lr_min: f64) -> f64 {
    let step = step.min(total_steps);
    if step < warmup_steps {
        return lr_max * step as f64 / warmup_steps as f64;
    }
    let span = total_steps.saturating_sub(warmup_steps);
    if span == 0 {
        return lr_max;
    }
    let progress = (step - warmup_steps) as f64 / span as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (PI * progress).cos())
}

/// A validated schedule, queried per optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub lr_max: f64,
    pub lr_min: f64,
}

impl LrSchedule {
    pub fn new(total_steps: u64, warmup_steps: u64, lr_max: f64, lr_min: f64) -> Result<Self> {
        if total_steps > 0 && warmup_steps >= total_steps {
            return Err(Error::Config(format!(
                "warmup_steps ({warmup_steps}) must be smaller than total_steps ({total_steps})"
            )));
        }
        if !(lr_max >= lr_min && lr_min >= 0.0) {
            return Err(Error::Config(format!("need lr_max >= lr_min >= 0, got {lr_max} / {lr_min}")));
        }
        Ok(Self { total_steps, warmup_steps, lr_max, lr_min })
    }

    pub fn lr(&self, step: u64) -> f64 {
        cosine_warmup_lr(step, self.total_steps, self.warmup_steps, self.lr_max, self.lr_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_midpoint() {
        assert!((cosine_warmup_lr(100, 1000, 200, 1e-4, 1e-6) - 0.5e-4).abs() < 1e-15);
    }

    #[test]
    fn endpoint_is_lr_min() {
        assert!((cosine_warmup_lr(1000, 1000, 200, 1e-4, 1e-6) - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn cosine_midpoint_is_average() {
        let lr = cosine_warmup_lr(600, 1000, 200, 1e-4, 1e-6);
        assert!((lr - (1e-4 + 1e-6) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_at_warmup_junction() {
        let at = cosine_warmup_lr(200, 1000, 200, 1e-4, 1e-6);
        let linear = 1e-4 * 200.0 / 200.0;
        assert!((at - linear).abs() < 1e-15);
        assert!((at - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn warmup_must_fit() {
        assert!(LrSchedule::new(100, 200, 1e-4, 1e-6).is_err());
    }
}

use crate::features::LoopStateRecord;
use crate::nn::Real;
use crate::{Error, Result};

/// The unmasked rows of every loop step, converted once to the compute type.
#[derive(Clone, Debug)]
pub struct RecordInput<S> {
    /// `T` blocks of `tokens × dim`.
    pub steps: Vec<Vec<S>>,
    pub dim: usize,
    pub tokens: usize,
}

impl<S: Real> RecordInput<S> {
    pub fn from_record(record: &LoopStateRecord) -> Result<Self> {
        if record.token_count() == 0 {
            return Err(Error::AllMasked);
        }
        let start = record.first_active() * record.dim();
        let steps =
            (0..record.steps()).map(|t| record.step(t)[start..].iter().map(|v| S::from_f16(*v)).collect()).collect();
        Ok(Self { steps, dim: record.dim(), tokens: record.token_count() })
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Per-step mean over tokens.
    pub fn mean_pooled(&self) -> Vec<Vec<S>> {
        let inv = S::one() / S::lit(self.tokens as f64);
        self.steps
            .iter()
            .map(|rows| {
                let mut acc = vec![S::zero(); self.dim];
                for row in rows.chunks_exact(self.dim) {
                    for (a, &v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
                acc.iter_mut().for_each(|a| *a *= inv);
                acc
            })
            .collect()
    }
}

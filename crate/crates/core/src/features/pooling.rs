use super::record::LoopStateRecord;
use crate::{Error, Result};

/// Mean of the unmasked token vectors of loop step `t`, accumulated in `f32`.
pub fn mean_pool_step(record: &LoopStateRecord, t: usize) -> Result<Vec<f32>> {
    let n = record.token_count();
    if n == 0 {
        return Err(Error::AllMasked);
    }
    let d = record.dim();
    let step = record.step(t);
    let mut acc = vec![0f32; d];
    for row in step[record.first_active() * d..].chunks_exact(d) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v.to_f32();
        }
    }
    let inv = 1.0 / n as f32;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

/// Per-step masked mean pooling, `T` rows of length `d`.
pub fn mean_pool(record: &LoopStateRecord) -> Result<Vec<Vec<f32>>> {
    (0..record.steps()).map(|t| mean_pool_step(record, t)).collect()
}

/// Step-major concatenation of pooled rows.
pub fn concat_pooled(pooled: &[Vec<f32>]) -> Vec<f32> {
    pooled.concat()
}

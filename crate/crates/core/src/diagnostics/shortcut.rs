use serde::{Deserialize, Serialize};

use crate::features::{mean_pool, LoopStateRecord, PairSource};
use crate::{Error, Result};

/// Surface statistics that could separate chosen from rejected without any
/// preference content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortcutReport {
    pub n: usize,
    pub chosen_mean_tokens: f64,
    pub rejected_mean_tokens: f64,
    /// Ties count as half.
    pub longer_is_chosen_acc: f64,
    /// Per loop step, comparing mean-pooled vector norms. Ties count as half.
    pub larger_norm_is_chosen_acc: Vec<f64>,
    /// Per loop step: chosen mean |activation| over rejected mean |activation|.
    pub mean_activation_ratio: Vec<f64>,
}

fn credit(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a == b {
        0.5
    } else {
        0.0
    }
}

fn abs_sum(record: &LoopStateRecord, t: usize) -> (f64, usize) {
    let rows = record.active_rows(t);
    (rows.iter().map(|v| v.abs() as f64).sum(), rows.len())
}

pub fn shortcut_analysis(source: &dyn PairSource) -> Result<ShortcutReport> {
    let (steps, _, _) = source.geometry();
    let mut n = 0usize;
    let (mut tok_c, mut tok_r, mut longer) = (0.0, 0.0, 0.0);
    let mut norm_acc = vec![0.0; steps];
    let mut abs_c = vec![(0.0, 0usize); steps];
    let mut abs_r = vec![(0.0, 0usize); steps];
    for ci in 0..source.num_chunks() {
        for p in source.load_chunk(ci)?.iter() {
            n += 1;
            let (c, r) = (p.chosen.token_count() as f64, p.rejected.token_count() as f64);
            tok_c += c;
            tok_r += r;
            longer += credit(c, r);
            let pc = mean_pool(&p.chosen)?;
            let pr = mean_pool(&p.rejected)?;
            for t in 0..steps {
                let norm = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                norm_acc[t] += credit(norm(&pc[t]), norm(&pr[t]));
                for (acc, rec) in [(&mut abs_c[t], &p.chosen), (&mut abs_r[t], &p.rejected)] {
                    let (s, k) = abs_sum(rec, t);
                    acc.0 += s;
                    acc.1 += k;
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::Empty("shortcut analysis input".into()));
    }
    let mut ratio = Vec::with_capacity(steps);
    for t in 0..steps {
        let c = abs_c[t].0 / abs_c[t].1 as f64;
        let r = abs_r[t].0 / abs_r[t].1 as f64;
        if !(r > 0.0) {
            return Err(Error::InvalidRecord(format!("rejected activations at step {t} are all zero")));
        }
        ratio.push(c / r);
    }
    let nf = n as f64;
    Ok(ShortcutReport {
        n,
        chosen_mean_tokens: tok_c / nf,
        rejected_mean_tokens: tok_r / nf,
        longer_is_chosen_acc: longer / nf,
        larger_norm_is_chosen_acc: norm_acc.into_iter().map(|a| a / nf).collect(),
        mean_activation_ratio: ratio,
    })
}

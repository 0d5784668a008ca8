use serde::{Deserialize, Serialize};

use super::metrics::EpochMetrics;

/// An epoch where held-out fixed-order accuracy has fallen from its peak
/// while the swap-protocol training accuracy is at its best so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionEvent {
    pub epoch: usize,
    pub peak_epoch: usize,
    pub peak_fixed_order_acc: f64,
    pub fixed_order_acc: f64,
    pub deflated_acc: f64,
}

impl InversionEvent {
    pub fn drop(&self) -> f64 {
        self.peak_fixed_order_acc - self.fixed_order_acc
    }
}

/// First epoch whose held-out accuracy is at least `min_drop` below the
/// running peak while deflated training accuracy is at its running maximum.
pub fn find_inversion(metrics: &[EpochMetrics], min_drop: f64) -> Option<InversionEvent> {
    let mut peak: Option<(usize, f64)> = None;
    let mut best_deflated = f64::NEG_INFINITY;
    for m in metrics {
        let acc = m.fixed_order_acc?;
        best_deflated = best_deflated.max(m.deflated_acc);
        if let Some((pe, pa)) = peak {
            if m.deflated_acc >= best_deflated && pa - acc >= min_drop {
                return Some(InversionEvent {
                    epoch: m.epoch,
                    peak_epoch: pe,
                    peak_fixed_order_acc: pa,
                    fixed_order_acc: acc,
                    deflated_acc: m.deflated_acc,
                });
            }
        }
        if peak.is_none_or(|(_, pa)| acc > pa) {
            peak = Some((m.epoch, acc));
        }
    }
    None
}

/// Human-readable warnings for every epoch where the deflated training
/// accuracy rose while the held-out fixed-order accuracy fell.
pub fn inversion_warnings(metrics: &[EpochMetrics]) -> Vec<String> {
    metrics
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (ea, eb) = (a.fixed_order_acc?, b.fixed_order_acc?);
            (b.deflated_acc > a.deflated_acc && eb < ea).then(|| {
                format!(
                    "epoch {}: swap-protocol training accuracy rose {:.1} -> {:.1} while held-out fixed-order accuracy fell {:.1} -> {:.1}; do not select checkpoints on the training metric",
                    b.epoch,
                    100.0 * a.deflated_acc,
                    100.0 * b.deflated_acc,
                    100.0 * ea,
                    100.0 * eb
                )
            })
        })
        .collect()
}

//! The training protocol: swap-based antisymmetry training, the pointwise
//! and calibrated losses, AdamW with a warmup-cosine schedule, and two
//! accuracies per epoch: the swap-protocol ("deflated") training accuracy and
//! the fixed-order accuracy, whose disagreement is what makes checkpoint
//! selection on the former misleading.

mod config;
mod inversion;
mod losses;
mod metrics;
mod run_dir;
mod swap;
mod trainer;

pub use config::{LossKind, TrainConfig};
pub use inversion::{find_inversion, inversion_warnings, InversionEvent};
pub use losses::{calibrated_loss, pairwise_loss, pointwise_ranking_loss};
pub use metrics::{
    deflated_accuracy, fixed_order_eval, fixed_order_scores, EpochMetrics, FixedOrderReport, ScoreStats,
};
pub use run_dir::{read_metrics_csv, write_metrics_csv, MetricsRow, RunDir, METRICS_CSV};
pub use swap::{swap_batch, OrderedPair};
pub use trainer::{train, TrainOutcome, Trainer};

//! Validation instruments: the flip test and its degeneracy rules, the
//! cross-epoch flip table, logistic probes over pooled loop states and the
//! structural-shortcut checks.

mod cross_epoch;
mod flip;
mod probe;
mod shortcut;

pub use cross_epoch::{cross_epoch_flip, CrossEpochRow, CrossEpochTable};
pub use flip::{
    bias_label, flip_report, flip_test, flip_test_model, pearson, spearman, CorrelationKind, FlipReport,
    CONSTANT_OUTPUT_REL_STD, ORDER_INSENSITIVE_MAX_FLIP_RATE,
};
pub use probe::{
    fit_logistic_probe, independent_probe, pairwise_probe, FeatureSource, LogisticFit, ProbeMode, ProbeOptions,
    ProbeReport,
};
pub use shortcut::{shortcut_analysis, ShortcutReport};

//! Synthetic loop states with a planted preference direction and known
//! Bayes-oracle accuracies.
//!
//! In relational mode each pair shares a large random offset, so a single
//! response says almost nothing about its label while the difference of the
//! two responses isolates the planted signal.

mod generate;
mod oracle;
mod spec;

pub use generate::{generate, generate_range, write_synth, GroundTruth, PairTruth, SynthDataset, GROUND_TRUTH_FILE};
pub use oracle::{closed_form_accuracy, oracle_accuracy, Access, DEFAULT_ORACLE_SAMPLES};
pub use spec::{SignalMode, SynthSpec};

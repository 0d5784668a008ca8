//! Preference evaluators over looped-transformer loop-iteration states.
//!
//! The crate is a small, self-contained laboratory: a dense numeric core with
//! hand-written reverse-mode derivatives ([`nn`]), the optimizer and schedule
//! used for training ([`optim`]), the chunked loop-state feature format
//! ([`features`]), a synthetic loop-state generator with Bayes-oracle
//! accuracies ([`synth`]), the evaluator architectures ([`evaluators`]), the
//! swap-protocol training loop with its dual metric bookkeeping
//! ([`training`]) and the validation instruments ([`diagnostics`]).
//!
//! The `looplab` binary exposes all of it as subcommands ([`cli`]).

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evaluators;
pub mod features;
pub mod nn;
pub mod optim;
mod par;
pub mod rng;
pub mod synth;
pub mod training;

pub use error::{Error, Result};

//! AdamW, cosine annealing with linear warmup, and global gradient clipping.

mod adamw;
mod clip;
mod schedule;

pub use adamw::{AdamW, AdamWConfig, OptimState};
pub use clip::{clip_grad_norm, global_grad_norm};
pub use schedule::{cosine_warmup_lr, LrSchedule};

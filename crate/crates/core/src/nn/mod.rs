//! Dense numeric core.
//!
//! Exactly the layers the evaluators need, each with a forward pass and a
//! hand-written reverse pass that accumulates into [`ParamTensor`] gradients.
//! Everything is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` for gradient checks.

mod activation;
mod dropout;
pub mod gradcheck;
mod gru;
mod layernorm;
mod linear;
mod param;
mod pool;
mod real;
mod softmax;

pub use activation::{gelu, gelu_grad, log_sigmoid, sigmoid};
pub use dropout::{dropout, DropoutMask};
pub use gradcheck::{grad_check, grad_check_against, GradCheckConfig, GradCheckReport, GradTarget};
pub use gru::{Gru, GruCache, GruLayer};
pub use layernorm::{LayerNorm, LayerNormCache, DEFAULT_LN_EPS};
pub use linear::{linear_forward, Linear};
pub use param::{ParamTensor, Parameterized};
pub use pool::{attention_pool, AttentionPool, PoolCache};
pub use real::Real;
pub use softmax::{masked_softmax, softmax_backward};

/// Forward-pass mode. Training mode carries the RNG stream used by dropout.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut crate::rng::SeededRng),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

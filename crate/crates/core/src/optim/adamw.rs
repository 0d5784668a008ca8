use serde::{Deserialize, Serialize};

use crate::nn::{ParamTensor, Real};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Per-parameter moments plus the step counter.
#[derive(Clone, Debug)]
pub struct OptimState<S> {
    pub m: Vec<Vec<S>>,
    pub v: Vec<Vec<S>>,
    pub step: u64,
    pub config: AdamWConfig,
}

/// Adam with decoupled weight decay: the decay multiplies the weights
/// directly and never enters the moment estimates.
#[derive(Clone, Debug)]
pub struct AdamW<S> {
    pub state: OptimState<S>,
}

impl<S: Real> AdamW<S> {
    pub fn new(params: &[&ParamTensor<S>], config: AdamWConfig) -> Self {
        let zeros = || params.iter().map(|p| vec![S::zero(); p.len()]).collect();
        Self { state: OptimState { m: zeros(), v: zeros(), step: 0, config } }
    }

    pub fn step_count(&self) -> u64 {
        self.state.step
    }

    pub fn step(&mut self, params: &mut [&mut ParamTensor<S>], lr: f64) -> Result<()> {
        if !(lr >= 0.0) {
            return Err(Error::Config(format!("learning rate must be >= 0, got {lr}")));
        }
        if params.len() != self.state.m.len() {
            return Err(Error::shape("AdamW parameter list", self.state.m.len(), params.len()));
        }
        for (i, p) in params.iter().enumerate() {
            if p.len() != self.state.m[i].len() {
                return Err(Error::shape(format!("AdamW state for {}", p.name()), self.state.m[i].len(), p.len()));
            }
            if let Some(bad) = p.grad().iter().find(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {} ({bad})", p.name())));
            }
        }
        let cfg = self.state.config;
        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let decay = S::lit(1.0 - lr * cfg.weight_decay);
        let (b1, b2) = (S::lit(cfg.beta1), S::lit(cfg.beta2));
        let (one_b1, one_b2) = (S::lit(1.0 - cfg.beta1), S::lit(1.0 - cfg.beta2));
        let step_size = S::lit(lr / bc1);
        let bc2_sqrt = S::lit(bc2.sqrt());
        let eps = S::lit(cfg.eps);
        for (i, p) in params.iter_mut().enumerate() {
            let m = &mut self.state.m[i];
            let v = &mut self.state.v[i];
            let (w, g) = p.values_and_grad_mut();
            for k in 0..w.len() {
                m[k] = b1 * m[k] + one_b1 * g[k];
                v[k] = b2 * v[k] + one_b2 * g[k] * g[k];
                w[k] = w[k] * decay - step_size * m[k] / (v[k].sqrt() / bc2_sqrt + eps);
            }
        }
        Ok(())
    }
}

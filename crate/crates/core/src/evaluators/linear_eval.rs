use rand::Rng;

use super::config::LinearConfig;
use super::input::RecordInput;
use crate::nn::{Linear, ParamTensor, Parameterized, Real};
use crate::{Error, Result};

/// One affine map on the concatenated mean-pooled steps.
#[derive(Clone, Debug)]
pub struct LinearEvaluator<S> {
    pub config: LinearConfig,
    pub linear: Linear<S>,
}

#[derive(Clone, Debug)]
pub struct LinearCache<S> {
    features: Vec<S>,
}

impl<S: Real> LinearEvaluator<S> {
    pub fn zeros(config: LinearConfig) -> Self {
        Self { linear: Linear::zeros("linear", config.steps * config.d_in, 1, true), config }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.linear.init_uniform(rng);
    }

    pub fn forward(&self, x: &RecordInput<S>) -> Result<(S, LinearCache<S>)> {
        if x.num_steps() != self.config.steps || x.dim != self.config.d_in {
            return Err(Error::shape(
                "linear evaluator input",
                format!("[{}, {}]", self.config.steps, self.config.d_in),
                format!("[{}, {}]", x.num_steps(), x.dim),
            ));
        }
        let features = x.mean_pooled().concat();
        let score = self.linear.forward(&features)?[0];
        Ok((score, LinearCache { features }))
    }

    pub fn backward(&mut self, cache: &LinearCache<S>, grad: S) {
        self.linear.backward(&cache.features, &[grad]);
    }
}

impl<S: Real> Parameterized<S> for LinearEvaluator<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        self.linear.params()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        self.linear.params_mut()
    }
}

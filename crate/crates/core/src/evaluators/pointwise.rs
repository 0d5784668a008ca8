use rand::Rng;

use super::config::{PointwiseV1Config, PointwiseV2Config};
use super::input::RecordInput;
use super::trunk::{Trunk, TrunkCache};
use super::POOL_INIT_STD;
use crate::nn::{gelu, gelu_grad, AttentionPool, Linear, Mode, ParamTensor, Parameterized, PoolCache, Real};
use crate::{Error, Result};

/// Attention pool per step, then the shared trunk on a single response.
#[derive(Clone, Debug)]
pub struct PointwiseV2<S> {
    pub config: PointwiseV2Config,
    pub pool: AttentionPool<S>,
    pub trunk: Trunk<S>,
}

#[derive(Clone, Debug)]
pub struct V2Cache<S> {
    input: RecordInput<S>,
    pool: Vec<PoolCache<S>>,
    trunk: TrunkCache<S>,
}

impl<S: Real> PointwiseV2<S> {
    pub fn zeros(config: PointwiseV2Config) -> Self {
        let pool = AttentionPool::zeros("pool", config.d_in, config.pool_rank);
        let trunk = Trunk::zeros(
            config.d_in,
            config.proj_dim,
            config.gru_layers,
            config.gru_hidden,
            config.scorer_hidden,
            config.dropout_rate,
            config.ln_bias,
            config.proj_bias,
        );
        Self { config, pool, trunk }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.pool.init_normal(rng, POOL_INIT_STD);
        self.trunk.init(rng);
    }

    pub fn forward(&self, x: &RecordInput<S>, mode: &mut Mode<'_>) -> Result<(S, V2Cache<S>)> {
        if x.dim != self.config.d_in {
            return Err(Error::shape("pointwise input dim", self.config.d_in, x.dim));
        }
        let mut pooled = Vec::with_capacity(x.num_steps());
        let mut pool = Vec::with_capacity(x.num_steps());
        for rows in &x.steps {
            let (p, c) = self.pool.forward_rows(rows)?;
            pooled.push(p);
            pool.push(c);
        }
        let (score, trunk) = self.trunk.forward(&pooled, mode)?;
        Ok((score, V2Cache { input: x.clone(), pool, trunk }))
    }

    pub fn backward(&mut self, cache: &V2Cache<S>, grad: S) {
        let g = self.trunk.backward(&cache.trunk, grad);
        for (t, gt) in g.iter().enumerate() {
            self.pool.backward_rows(&cache.input.steps[t], &cache.pool[t], gt, None);
        }
    }
}

impl<S: Real> Parameterized<S> for PointwiseV2<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        let mut v = self.pool.params();
        v.extend(self.trunk.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut v = self.pool.params_mut();
        v.extend(self.trunk.params_mut());
        v
    }
}

/// Two-layer GELU MLP on the concatenated mean-pooled steps.
#[derive(Clone, Debug)]
pub struct PointwiseV1<S> {
    pub config: PointwiseV1Config,
    pub fc: Linear<S>,
    pub out: Linear<S>,
}

#[derive(Clone, Debug)]
pub struct V1Cache<S> {
    features: Vec<S>,
    pre: Vec<S>,
    act: Vec<S>,
}

impl<S: Real> PointwiseV1<S> {
    pub fn zeros(config: PointwiseV1Config) -> Self {
        let input = config.steps * config.d_in;
        Self {
            fc: Linear::zeros("fc", input, config.hidden, true),
            out: Linear::zeros("out", config.hidden, 1, true),
            config,
        }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.fc.init_uniform(rng);
        self.out.init_uniform(rng);
    }

    pub fn forward_features(&self, features: Vec<S>) -> Result<(S, V1Cache<S>)> {
        let pre = self.fc.forward(&features)?;
        let act: Vec<S> = pre.iter().map(|&v| gelu(v)).collect();
        let score = self.out.forward(&act)?[0];
        Ok((score, V1Cache { features, pre, act }))
    }

    pub fn forward(&self, x: &RecordInput<S>) -> Result<(S, V1Cache<S>)> {
        if x.num_steps() != self.config.steps || x.dim != self.config.d_in {
            return Err(Error::shape(
                "V1 input",
                format!("[{}, {}]", self.config.steps, self.config.d_in),
                format!("[{}, {}]", x.num_steps(), x.dim),
            ));
        }
        self.forward_features(x.mean_pooled().concat())
    }

    pub fn backward(&mut self, cache: &V1Cache<S>, grad: S) {
        let g_act = self.out.backward(&cache.act, &[grad]);
        let g_pre: Vec<S> = g_act.iter().zip(&cache.pre).map(|(&g, &p)| g * gelu_grad(p)).collect();
        self.fc.backward(&cache.features, &g_pre);
    }
}

impl<S: Real> Parameterized<S> for PointwiseV1<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        let mut v = self.fc.params();
        v.extend(self.out.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut v = self.fc.params_mut();
        v.extend(self.out.params_mut());
        v
    }
}

use rand::Rng;

use super::config::PairwiseConfig;
use super::input::RecordInput;
use super::trunk::{Trunk, TrunkCache};
use super::POOL_INIT_STD;
use crate::nn::{AttentionPool, LayerNormCache, Mode, ParamTensor, Parameterized, PoolCache, Real};
use crate::{Error, Result};

/// Scores an ordered pair `(a, b)`; positive means `a` is preferred.
///
/// Both records go through one shared attention pool per loop step, the
/// per-step differences are normalized by a bias-free LayerNorm and
/// projected without bias, so swapping the arguments exactly negates every
/// GRU input.
#[derive(Clone, Debug)]
pub struct PairwiseEvaluator<S> {
    pub config: PairwiseConfig,
    pub pool: AttentionPool<S>,
    pub trunk: Trunk<S>,
}

#[derive(Clone, Debug)]
pub struct PairwiseCache<S> {
    a: RecordInput<S>,
    b: RecordInput<S>,
    pool_a: Vec<PoolCache<S>>,
    pool_b: Vec<PoolCache<S>>,
    /// Per-side norm caches in pre-difference mode.
    side_norm: Option<(Vec<LayerNormCache<S>>, Vec<LayerNormCache<S>>)>,
    trunk: TrunkCache<S>,
}

impl<S: Real> PairwiseEvaluator<S> {
    pub fn zeros(config: PairwiseConfig) -> Self {
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

    fn check(&self, a: &RecordInput<S>, b: &RecordInput<S>) -> Result<()> {
        if a.dim != self.config.d_in || b.dim != self.config.d_in {
            return Err(Error::shape("pairwise input dim", self.config.d_in, format!("{} / {}", a.dim, b.dim)));
        }
        if a.num_steps() != b.num_steps() {
            return Err(Error::shape("pairwise loop steps", a.num_steps(), b.num_steps()));
        }
        Ok(())
    }

    fn pool_all(&self, x: &RecordInput<S>) -> Result<(Vec<Vec<S>>, Vec<PoolCache<S>>)> {
        let mut pooled = Vec::with_capacity(x.num_steps());
        let mut caches = Vec::with_capacity(x.num_steps());
        for rows in &x.steps {
            let (p, c) = self.pool.forward_rows(rows)?;
            pooled.push(p);
            caches.push(c);
        }
        Ok((pooled, caches))
    }

    fn normed_diffs(
        &self,
        pa: &[Vec<S>],
        pb: &[Vec<S>],
    ) -> Result<(Vec<Vec<S>>, Vec<LayerNormCache<S>>, Option<(Vec<LayerNormCache<S>>, Vec<LayerNormCache<S>>)>)> {
        if self.config.pre_diff_norm {
            let (na, ca) = self.trunk.normalize(pa)?;
            let (nb, cb) = self.trunk.normalize(pb)?;
            let diffs = na.iter().zip(&nb).map(|(x, y)| sub(x, y)).collect();
            Ok((diffs, Vec::new(), Some((ca, cb))))
        } else {
            let diffs: Vec<Vec<S>> = pa.iter().zip(pb).map(|(x, y)| sub(x, y)).collect();
            let (normed, caches) = self.trunk.normalize(&diffs)?;
            Ok((normed, caches, None))
        }
    }

    /// The projected per-step differences fed to the GRU.
    pub fn projected_diffs(&self, a: &RecordInput<S>, b: &RecordInput<S>) -> Result<Vec<Vec<S>>> {
        self.check(a, b)?;
        let (pa, _) = self.pool_all(a)?;
        let (pb, _) = self.pool_all(b)?;
        let (normed, _, _) = self.normed_diffs(&pa, &pb)?;
        self.trunk.project(&normed)
    }

    pub fn forward(
        &self,
        a: &RecordInput<S>,
        b: &RecordInput<S>,
        mode: &mut Mode<'_>,
    ) -> Result<(S, PairwiseCache<S>)> {
        self.check(a, b)?;
        let (pa, pool_a) = self.pool_all(a)?;
        let (pb, pool_b) = self.pool_all(b)?;
        let (normed, diff_norm, side_norm) = self.normed_diffs(&pa, &pb)?;
        let (score, mut trunk) = self.trunk.forward_normed(normed, mode)?;
        if side_norm.is_none() {
            trunk = trunk.with_norm(diff_norm);
        }
        Ok((score, PairwiseCache { a: a.clone(), b: b.clone(), pool_a, pool_b, side_norm, trunk }))
    }

    pub fn score(&self, a: &RecordInput<S>, b: &RecordInput<S>, mode: &mut Mode<'_>) -> Result<S> {
        Ok(self.forward(a, b, mode)?.0)
    }

    pub fn backward(&mut self, cache: &PairwiseCache<S>, grad: S) {
        let g = self.trunk.backward(&cache.trunk, grad);
        let (g_a, g_b): (Vec<Vec<S>>, Vec<Vec<S>>) = match &cache.side_norm {
            None => {
                let neg = g.iter().map(|v| v.iter().map(|&x| -x).collect()).collect();
                (g, neg)
            }
            Some((ca, cb)) => {
                let ga = ca.iter().zip(&g).map(|(c, gi)| self.trunk.norm.backward(c, gi)).collect();
                let neg: Vec<Vec<S>> = g.iter().map(|v| v.iter().map(|&x| -x).collect()).collect();
                let gb = cb.iter().zip(&neg).map(|(c, gi)| self.trunk.norm.backward(c, gi)).collect();
                (ga, gb)
            }
        };
        for t in 0..g_a.len() {
            self.pool.backward_rows(&cache.a.steps[t], &cache.pool_a[t], &g_a[t], None);
            self.pool.backward_rows(&cache.b.steps[t], &cache.pool_b[t], &g_b[t], None);
        }
    }
}

fn sub<S: Real>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

impl<S: Real> Parameterized<S> for PairwiseEvaluator<S> {
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

use rand::Rng;

use super::scorer::{Scorer, ScorerCache};
use crate::nn::{Gru, GruCache, LayerNorm, LayerNormCache, Linear, Mode, ParamTensor, Parameterized, Real};
use crate::{Error, Result};

/// The part shared by the pairwise and V2 evaluators: per-step
/// `LayerNorm -> projection`, a GRU over the steps, a skip connection from
/// the last projected step, and the scorer head.
#[derive(Clone, Debug)]
pub struct Trunk<S> {
    pub norm: LayerNorm<S>,
    pub proj: Linear<S>,
    pub gru: Gru<S>,
    pub scorer: Scorer<S>,
}

#[derive(Clone, Debug)]
pub struct TrunkCache<S> {
    /// Empty when the caller normalized the inputs itself.
    norm: Vec<LayerNormCache<S>>,
    normed: Vec<Vec<S>>,
    gru: GruCache<S>,
    scorer: ScorerCache<S>,
}

impl<S> TrunkCache<S> {
    /// Attaches the caches of a normalization done outside the trunk, so
    /// [`Trunk::backward`] differentiates through it.
    pub(crate) fn with_norm(mut self, norm: Vec<LayerNormCache<S>>) -> Self {
        self.norm = norm;
        self
    }
}

impl<S: Real> Trunk<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn zeros(
        d_in: usize,
        proj_dim: usize,
        gru_layers: usize,
        gru_hidden: usize,
        scorer_hidden: usize,
        dropout_rate: f64,
        ln_bias: bool,
        proj_bias: bool,
    ) -> Self {
        Self {
            norm: LayerNorm::new("norm", d_in, ln_bias),
            proj: Linear::zeros("proj", d_in, proj_dim, proj_bias),
            gru: Gru::zeros("gru", proj_dim, gru_hidden, gru_layers),
            scorer: Scorer::zeros("scorer", gru_hidden + proj_dim, scorer_hidden, dropout_rate),
        }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.proj.init_uniform(rng);
        self.gru.init_uniform(rng);
        self.scorer.init(rng);
    }

    /// Normalizes each step with the trunk's LayerNorm.
    pub fn normalize(&self, xs: &[Vec<S>]) -> Result<(Vec<Vec<S>>, Vec<LayerNormCache<S>>)> {
        let mut normed = Vec::with_capacity(xs.len());
        let mut caches = Vec::with_capacity(xs.len());
        for x in xs {
            let (y, c) = self.norm.forward(x)?;
            normed.push(y);
            caches.push(c);
        }
        Ok((normed, caches))
    }

    pub fn project(&self, normed: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
        normed.iter().map(|x| self.proj.forward(x)).collect()
    }

    pub fn forward(&self, xs: &[Vec<S>], mode: &mut Mode<'_>) -> Result<(S, TrunkCache<S>)> {
        let (normed, norm) = self.normalize(xs)?;
        let (score, mut cache) = self.forward_normed(normed, mode)?;
        cache.norm = norm;
        Ok((score, cache))
    }

    /// Runs from already-normalized steps.
    pub fn forward_normed(&self, normed: Vec<Vec<S>>, mode: &mut Mode<'_>) -> Result<(S, TrunkCache<S>)> {
        if normed.is_empty() {
            return Err(Error::Empty("loop steps".into()));
        }
        let projected = self.project(&normed)?;
        let (h, gru) = self.gru.forward(&projected)?;
        let mut combined = h;
        combined.extend_from_slice(projected.last().expect("non-empty"));
        let (score, scorer) = self.scorer.forward(&combined, mode)?;
        Ok((score, TrunkCache { norm: Vec::new(), normed, gru, scorer }))
    }

    /// Returns gradients with respect to the trunk inputs: the raw steps when
    /// the trunk normalized them, the normalized steps otherwise.
    pub fn backward(&mut self, cache: &TrunkCache<S>, grad: S) -> Vec<Vec<S>> {
        let g_combined = self.scorer.backward(&cache.scorer, grad);
        let hidden = self.gru.hidden_dim();
        let mut g_proj = self.gru.backward(&cache.gru, &g_combined[..hidden]);
        let last = g_proj.len() - 1;
        for (g, &s) in g_proj[last].iter_mut().zip(&g_combined[hidden..]) {
            *g += s;
        }
        let g_normed: Vec<Vec<S>> = cache.normed.iter().zip(&g_proj).map(|(x, g)| self.proj.backward(x, g)).collect();
        if cache.norm.is_empty() {
            return g_normed;
        }
        cache.norm.iter().zip(&g_normed).map(|(c, g)| self.norm.backward(c, g)).collect()
    }
}

impl<S: Real> Parameterized<S> for Trunk<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        let mut v = self.norm.params();
        v.extend(self.proj.params());
        v.extend(self.gru.params());
        v.extend(self.scorer.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut v = self.norm.params_mut();
        v.extend(self.proj.params_mut());
        v.extend(self.gru.params_mut());
        v.extend(self.scorer.params_mut());
        v
    }
}

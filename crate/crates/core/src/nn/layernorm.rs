use super::{ParamTensor, Parameterized, Real};
use crate::{Error, Result};

pub const DEFAULT_LN_EPS: f64 = 1e-5;

/// Layer normalization over the last dimension with a learned gain and an
/// optional bias. Without the bias the map is odd: `LN(-x) = -LN(x)`.
#[derive(Clone, Debug)]
pub struct LayerNorm<S> {
    pub gain: ParamTensor<S>,
    pub bias: Option<ParamTensor<S>>,
    pub eps: S,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache<S> {
    normalized: Vec<S>,
    inv_std: S,
}

impl<S: Real> LayerNorm<S> {
    /// Gain initialized to one, bias (if any) to zero.
    pub fn new(name: &str, dim: usize, bias: bool) -> Self {
        let mut gain = ParamTensor::zeros(format!("{name}.gain"), &[dim]);
        gain.values_mut().iter_mut().for_each(|g| *g = S::one());
        Self {
            gain,
            bias: bias.then(|| ParamTensor::zeros(format!("{name}.bias"), &[dim])),
            eps: S::lit(DEFAULT_LN_EPS),
        }
    }

    pub fn with_eps(mut self, eps: S) -> Self {
        self.eps = eps;
        self
    }

    pub fn dim(&self) -> usize {
        self.gain.len()
    }

    pub fn forward(&self, x: &[S]) -> Result<(Vec<S>, LayerNormCache<S>)> {
        if x.is_empty() {
            return Err(Error::Empty("layernorm input".into()));
        }
        if x.len() != self.dim() {
            return Err(Error::shape("layernorm input", self.dim(), x.len()));
        }
        let n = S::lit(x.len() as f64);
        let mean = x.iter().copied().sum::<S>() / n;
        let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / n;
        let inv_std = S::one() / (var + self.eps).sqrt();
        let normalized: Vec<S> = x.iter().map(|&v| (v - mean) * inv_std).collect();
        let gain = self.gain.values();
        let y = match &self.bias {
            Some(b) => normalized.iter().zip(gain).zip(b.values()).map(|((&h, &g), &b)| h * g + b).collect(),
            None => normalized.iter().zip(gain).map(|(&h, &g)| h * g).collect(),
        };
        Ok((y, LayerNormCache { normalized, inv_std }))
    }

    pub fn backward(&mut self, cache: &LayerNormCache<S>, grad_out: &[S]) -> Vec<S> {
        let n = S::lit(grad_out.len() as f64);
        let xhat = &cache.normalized;
        {
            let gg = self.gain.grad_mut();
            for i in 0..grad_out.len() {
                gg[i] += grad_out[i] * xhat[i];
            }
        }
        if let Some(b) = &mut self.bias {
            for (g, &go) in b.grad_mut().iter_mut().zip(grad_out) {
                *g += go;
            }
        }
        let gxhat: Vec<S> = grad_out.iter().zip(self.gain.values()).map(|(&go, &g)| go * g).collect();
        let sum_g: S = gxhat.iter().copied().sum();
        let sum_gx: S = gxhat.iter().zip(xhat).map(|(&g, &h)| g * h).sum();
        gxhat.iter().zip(xhat).map(|(&g, &h)| cache.inv_std / n * (n * g - sum_g - h * sum_gx)).collect()
    }
}

impl<S: Real> Parameterized<S> for LayerNorm<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        std::iter::once(&self.gain).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        std::iter::once(&mut self.gain).chain(self.bias.as_mut()).collect()
    }
}

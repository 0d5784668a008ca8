use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{masked_softmax, softmax_backward, ParamTensor, Parameterized, Real};
use crate::{Error, Result};

/// Low-rank attention pooling over tokens:
/// `keys = H·K`, `weights = masked_softmax(keys·q)`, `pooled = Σ weights_t H_t`.
#[derive(Clone, Debug)]
pub struct AttentionPool<S> {
    /// `[d, r]`
    pub keys: ParamTensor<S>,
    /// `[r]`
    pub query: ParamTensor<S>,
}

/// Saved activations of one pooling call over the active (unmasked) rows.
#[derive(Clone, Debug)]
pub struct PoolCache<S> {
    pub weights: Vec<S>,
    projected: Vec<S>,
}

impl<S: Real> AttentionPool<S> {
    pub fn zeros(name: &str, dim: usize, rank: usize) -> Self {
        Self {
            keys: ParamTensor::zeros(format!("{name}.keys"), &[dim, rank]),
            query: ParamTensor::zeros(format!("{name}.query"), &[rank]),
        }
    }

    /// Normal(0, std) initialization of keys and query.
    pub fn init_normal<R: Rng + ?Sized>(&mut self, rng: &mut R, std: f64) {
        let normal = Normal::new(0.0, std).expect("valid std");
        for v in self.keys.values_mut().iter_mut().chain(self.query.values_mut()) {
            *v = S::lit(normal.sample(rng));
        }
    }

    pub fn dim(&self) -> usize {
        self.keys.shape()[0]
    }

    pub fn rank(&self) -> usize {
        self.keys.shape()[1]
    }

    /// Pools `rows` (`n × d`, all active).
    pub fn forward_rows(&self, rows: &[S]) -> Result<(Vec<S>, PoolCache<S>)> {
        let (d, r) = (self.dim(), self.rank());
        if rows.is_empty() {
            return Err(Error::AllMasked);
        }
        if !rows.len().is_multiple_of(d) {
            return Err(Error::shape("attention pool rows", format!("multiple of {d}"), rows.len()));
        }
        let n = rows.len() / d;
        let k = self.keys.values();
        let q = self.query.values();
        let mut projected = vec![S::zero(); n * r];
        let mut logits = Vec::with_capacity(n);
        for t in 0..n {
            let h = &rows[t * d..(t + 1) * d];
            let p = &mut projected[t * r..(t + 1) * r];
            for (i, &hi) in h.iter().enumerate() {
                if hi == S::zero() {
                    continue;
                }
                for (pj, &kij) in p.iter_mut().zip(&k[i * r..(i + 1) * r]) {
                    *pj += hi * kij;
                }
            }
            logits.push(p.iter().zip(q).map(|(&a, &b)| a * b).sum::<S>());
        }
        let weights = masked_softmax(&logits, &vec![1u8; n])?;
        let mut pooled = vec![S::zero(); d];
        for t in 0..n {
            let w = weights[t];
            for (o, &h) in pooled.iter_mut().zip(&rows[t * d..(t + 1) * d]) {
                *o += w * h;
            }
        }
        Ok((pooled, PoolCache { weights, projected }))
    }

    /// Pools an `L × d` matrix under a binary mask.
    pub fn forward(&self, h: &[S], mask: &[u8]) -> Result<(Vec<S>, PoolCache<S>)> {
        let rows = gather_active(h, mask, self.dim())?;
        self.forward_rows(&rows)
    }

    /// Accumulates key/query gradients. When `grad_rows` is given (same
    /// layout as `rows`) the input gradient is accumulated into it.
    pub fn backward_rows(&mut self, rows: &[S], cache: &PoolCache<S>, grad_pooled: &[S], grad_rows: Option<&mut [S]>) {
        let (d, r) = (self.dim(), self.rank());
        let n = cache.weights.len();
        let grad_w: Vec<S> =
            (0..n).map(|t| rows[t * d..(t + 1) * d].iter().zip(grad_pooled).map(|(&h, &g)| h * g).sum()).collect();
        let grad_logits = softmax_backward(&cache.weights, &grad_w);

        let q: Vec<S> = self.query.values().to_vec();
        {
            let gq = self.query.grad_mut();
            for t in 0..n {
                let gl = grad_logits[t];
                for (g, &p) in gq.iter_mut().zip(&cache.projected[t * r..(t + 1) * r]) {
                    *g += gl * p;
                }
            }
        }
        // keys·q, used for the input gradient
        let kq: Vec<S> = if grad_rows.is_some() {
            let k = self.keys.values();
            (0..d).map(|i| k[i * r..(i + 1) * r].iter().zip(&q).map(|(&a, &b)| a * b).sum()).collect()
        } else {
            Vec::new()
        };
        {
            let gk = self.keys.grad_mut();
            for t in 0..n {
                let gl = grad_logits[t];
                if gl == S::zero() {
                    continue;
                }
                for (i, &hi) in rows[t * d..(t + 1) * d].iter().enumerate() {
                    let s = gl * hi;
                    for (g, &qj) in gk[i * r..(i + 1) * r].iter_mut().zip(&q) {
                        *g += s * qj;
                    }
                }
            }
        }
        if let Some(gr) = grad_rows {
            for t in 0..n {
                let w = cache.weights[t];
                let gl = grad_logits[t];
                for i in 0..d {
                    gr[t * d + i] += w * grad_pooled[i] + gl * kq[i];
                }
            }
        }
    }
}

impl<S: Real> Parameterized<S> for AttentionPool<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        vec![&self.keys, &self.query]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        vec![&mut self.keys, &mut self.query]
    }
}

/// Copies the rows of `h` whose mask entry is nonzero.
pub(crate) fn gather_active<S: Real>(h: &[S], mask: &[u8], d: usize) -> Result<Vec<S>> {
    if h.len() != mask.len() * d {
        return Err(Error::shape("pooling input", mask.len() * d, h.len()));
    }
    let mut rows = Vec::with_capacity(h.len());
    for (t, &m) in mask.iter().enumerate() {
        if m != 0 {
            rows.extend_from_slice(&h[t * d..(t + 1) * d]);
        }
    }
    if rows.is_empty() {
        return Err(Error::AllMasked);
    }
    Ok(rows)
}

/// Functional form: pools `h` (`L × d`) with the given key and query tensors.
pub fn attention_pool<S: Real>(h: &[S], mask: &[u8], keys: &ParamTensor<S>, query: &ParamTensor<S>) -> Result<Vec<S>> {
    if keys.shape().len() != 2 || query.len() != keys.shape()[1] {
        return Err(Error::shape("attention pool query", keys.shape().get(1).copied().unwrap_or(0), query.len()));
    }
    if keys.shape()[1] > keys.shape()[0] {
        return Err(Error::Config(format!("pooling rank {} exceeds input dim {}", keys.shape()[1], keys.shape()[0])));
    }
    let pool = AttentionPool { keys: keys.clone(), query: query.clone() };
    pool.forward(h, mask).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_mean_pool() {
        let pool = AttentionPool::<f64>::zeros("p", 2, 1);
        let h = [9.0, 9.0, 1.0, 2.0, 3.0, 6.0];
        let (out, _) = pool.forward(&h, &[0, 1, 1]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-12 && (out[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_unmasked_row_is_returned_exactly() {
        let mut pool = AttentionPool::<f64>::zeros("p", 2, 1);
        pool.keys.set_values(&[0.3, -0.7]).unwrap();
        pool.query.set_values(&[1.3]).unwrap();
        let (out, _) = pool.forward(&[1.0, 2.0, 3.0, 4.0], &[0, 1]).unwrap();
        assert_eq!(out, vec![3.0, 4.0]);
    }

    #[test]
    fn all_masked_propagates() {
        let pool = AttentionPool::<f32>::zeros("p", 2, 1);
        assert!(matches!(pool.forward(&[1.0, 2.0], &[0]), Err(Error::AllMasked)));
    }
}

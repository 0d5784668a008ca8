//! Stacked GRU with the fully-gated formulation (gate order r, z, n):
//!
//! ```text
//! r  = σ(W_ir x + b_ir + W_hr h + b_hr)
//! z  = σ(W_iz x + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in x + b_in + r ⊙ (W_hn h + b_hn))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```
//!
//! The initial hidden state is zero; the output is the last layer's final
//! hidden state.

use rand::Rng;

use super::{sigmoid, ParamTensor, Parameterized, Real};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GruLayer<S> {
    /// `[3h, in]`
    pub w_ih: ParamTensor<S>,
    /// `[3h, h]`
    pub w_hh: ParamTensor<S>,
    pub b_ih: ParamTensor<S>,
    pub b_hh: ParamTensor<S>,
}

#[derive(Clone, Debug)]
pub struct Gru<S> {
    pub layers: Vec<GruLayer<S>>,
    hidden: usize,
}

#[derive(Clone, Debug)]
struct StepCache<S> {
    x: Vec<S>,
    h_prev: Vec<S>,
    r: Vec<S>,
    z: Vec<S>,
    n: Vec<S>,
    hn: Vec<S>,
}

/// Activations saved for backpropagation through time.
#[derive(Clone, Debug)]
pub struct GruCache<S> {
    steps: Vec<Vec<StepCache<S>>>,
}

fn matvec<S: Real>(w: &[S], x: &[S], rows: usize, out: &mut [S]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)).take(rows) {
        *o += row.iter().zip(x).map(|(&a, &b)| a * b).sum::<S>();
    }
}

impl<S: Real> GruLayer<S> {
    fn zeros(name: &str, input: usize, hidden: usize) -> Self {
        Self {
            w_ih: ParamTensor::zeros(format!("{name}.w_ih"), &[3 * hidden, input]),
            w_hh: ParamTensor::zeros(format!("{name}.w_hh"), &[3 * hidden, hidden]),
            b_ih: ParamTensor::zeros(format!("{name}.b_ih"), &[3 * hidden]),
            b_hh: ParamTensor::zeros(format!("{name}.b_hh"), &[3 * hidden]),
        }
    }

    fn input_dim(&self) -> usize {
        self.w_ih.shape()[1]
    }

    fn cell(&self, x: &[S], h_prev: &[S]) -> (Vec<S>, StepCache<S>) {
        let h = h_prev.len();
        let mut gi = self.b_ih.values().to_vec();
        matvec(self.w_ih.values(), x, 3 * h, &mut gi);
        let mut gh = self.b_hh.values().to_vec();
        matvec(self.w_hh.values(), h_prev, 3 * h, &mut gh);
        let r: Vec<S> = (0..h).map(|j| sigmoid(gi[j] + gh[j])).collect();
        let z: Vec<S> = (0..h).map(|j| sigmoid(gi[h + j] + gh[h + j])).collect();
        let hn: Vec<S> = gh[2 * h..].to_vec();
        let n: Vec<S> = (0..h).map(|j| (gi[2 * h + j] + r[j] * hn[j]).tanh()).collect();
        let out = (0..h).map(|j| (S::one() - z[j]) * n[j] + z[j] * h_prev[j]).collect();
        let cache = StepCache { x: x.to_vec(), h_prev: h_prev.to_vec(), r, z, n, hn };
        (out, cache)
    }

    /// One step of the reverse pass. Returns (grad x, grad h_prev).
    fn cell_backward(&mut self, c: &StepCache<S>, dh: &[S]) -> (Vec<S>, Vec<S>) {
        let h = dh.len();
        let input = c.x.len();
        let mut gi = vec![S::zero(); 3 * h];
        let mut gh = vec![S::zero(); 3 * h];
        let mut dh_prev = vec![S::zero(); h];
        for j in 0..h {
            let (r, z, n) = (c.r[j], c.z[j], c.n[j]);
            let dn = dh[j] * (S::one() - z);
            let dz = dh[j] * (c.h_prev[j] - n);
            dh_prev[j] = dh[j] * z;
            let da_n = dn * (S::one() - n * n);
            let dr = da_n * c.hn[j];
            let da_r = dr * r * (S::one() - r);
            let da_z = dz * z * (S::one() - z);
            gi[j] = da_r;
            gi[h + j] = da_z;
            gi[2 * h + j] = da_n;
            gh[j] = da_r;
            gh[h + j] = da_z;
            gh[2 * h + j] = da_n * r;
        }
        let mut dx = vec![S::zero(); input];
        {
            let (w, gw) = self.w_ih.values_and_grad_mut();
            for (row, &g) in gi.iter().enumerate() {
                if g == S::zero() {
                    continue;
                }
                let wr = &w[row * input..(row + 1) * input];
                let gr = &mut gw[row * input..(row + 1) * input];
                for k in 0..input {
                    gr[k] += g * c.x[k];
                    dx[k] += g * wr[k];
                }
            }
        }
        {
            let (w, gw) = self.w_hh.values_and_grad_mut();
            for (row, &g) in gh.iter().enumerate() {
                if g == S::zero() {
                    continue;
                }
                let wr = &w[row * h..(row + 1) * h];
                let gr = &mut gw[row * h..(row + 1) * h];
                for k in 0..h {
                    gr[k] += g * c.h_prev[k];
                    dh_prev[k] += g * wr[k];
                }
            }
        }
        for (b, &g) in self.b_ih.grad_mut().iter_mut().zip(&gi) {
            *b += g;
        }
        for (b, &g) in self.b_hh.grad_mut().iter_mut().zip(&gh) {
            *b += g;
        }
        (dx, dh_prev)
    }
}

impl<S: Real> Gru<S> {
    pub fn zeros(name: &str, input: usize, hidden: usize, layers: usize) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let input = if l == 0 { input } else { hidden };
                GruLayer::zeros(&format!("{name}.l{l}"), input, hidden)
            })
            .collect();
        Self { layers, hidden }
    }

    /// Uniform U(-1/sqrt(h), 1/sqrt(h)) for all weights and biases.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let bound = 1.0 / (self.hidden as f64).sqrt();
        for p in self.params_mut() {
            for v in p.values_mut() {
                *v = S::lit(rng.random_range(-bound..bound));
            }
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input_dim())
    }

    pub fn forward(&self, inputs: &[Vec<S>]) -> Result<(Vec<S>, GruCache<S>)> {
        if inputs.is_empty() {
            return Err(Error::Empty("GRU input sequence".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Config("GRU needs at least one layer".into()));
        }
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.input_dim()) {
            return Err(Error::shape("GRU input", self.input_dim(), bad.len()));
        }
        let mut seq: Vec<Vec<S>> = inputs.to_vec();
        let mut steps = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut h = vec![S::zero(); self.hidden];
            let mut caches = Vec::with_capacity(seq.len());
            let mut outs = Vec::with_capacity(seq.len());
            for x in &seq {
                let (next, cache) = layer.cell(x, &h);
                caches.push(cache);
                outs.push(next.clone());
                h = next;
            }
            steps.push(caches);
            seq = outs;
        }
        let last = seq.pop().expect("non-empty sequence");
        Ok((last, GruCache { steps }))
    }

    /// Backpropagation through time from the gradient of the final hidden
    /// state. Returns gradients for each input vector.
    pub fn backward(&mut self, cache: &GruCache<S>, grad_final: &[S]) -> Vec<Vec<S>> {
        let t_len = cache.steps[0].len();
        let mut grad_out: Vec<Vec<S>> = vec![vec![S::zero(); self.hidden]; t_len];
        grad_out[t_len - 1].copy_from_slice(grad_final);
        for (layer, steps) in self.layers.iter_mut().zip(&cache.steps).rev() {
            let mut grad_in = Vec::with_capacity(t_len);
            let mut carry = vec![S::zero(); self.hidden];
            for t in (0..t_len).rev() {
                let dh: Vec<S> = grad_out[t].iter().zip(&carry).map(|(&a, &b)| a + b).collect();
                let (dx, dh_prev) = layer.cell_backward(&steps[t], &dh);
                grad_in.push(dx);
                carry = dh_prev;
            }
            grad_in.reverse();
            grad_out = grad_in;
        }
        grad_out
    }
}

impl<S: Real> Parameterized<S> for Gru<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        self.layers.iter().flat_map(|l| [&l.w_ih, &l.w_hh, &l.b_ih, &l.b_hh]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w_ih, &mut l.w_hh, &mut l.b_ih, &mut l.b_hh]).collect()
    }
}

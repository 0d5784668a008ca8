use rand::Rng;

use super::{ParamTensor, Parameterized, Real};
use crate::{Error, Result};

/// Dense layer `y = xW + b` with `W` stored row-major as `[in, out]`.
#[derive(Clone, Debug)]
pub struct Linear<S> {
    pub weight: ParamTensor<S>,
    pub bias: Option<ParamTensor<S>>,
}

impl<S: Real> Linear<S> {
    pub fn zeros(name: &str, input: usize, output: usize, bias: bool) -> Self {
        Self {
            weight: ParamTensor::zeros(format!("{name}.weight"), &[input, output]),
            bias: bias.then(|| ParamTensor::zeros(format!("{name}.bias"), &[output])),
        }
    }

    /// Uniform fan-in initialization, U(-1/sqrt(in), 1/sqrt(in)).
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let bound = 1.0 / (self.input_dim() as f64).sqrt();
        for v in self.weight.values_mut() {
            *v = S::lit(rng.random_range(-bound..bound));
        }
        if let Some(b) = &mut self.bias {
            for v in b.values_mut() {
                *v = S::lit(rng.random_range(-bound..bound));
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        linear_forward(x, &self.weight, self.bias.as_ref())
    }

    /// Accumulates parameter gradients and returns the gradient of the input.
    pub fn backward(&mut self, x: &[S], grad_out: &[S]) -> Vec<S> {
        let (input, output) = (self.input_dim(), self.output_dim());
        debug_assert_eq!(x.len(), input);
        debug_assert_eq!(grad_out.len(), output);
        let mut grad_in = vec![S::zero(); input];
        let (w, gw) = self.weight.values_and_grad_mut();
        for i in 0..input {
            let row = &w[i * output..(i + 1) * output];
            let grow = &mut gw[i * output..(i + 1) * output];
            let xi = x[i];
            let mut acc = S::zero();
            for j in 0..output {
                grow[j] += xi * grad_out[j];
                acc += row[j] * grad_out[j];
            }
            grad_in[i] = acc;
        }
        if let Some(b) = &mut self.bias {
            for (g, &go) in b.grad_mut().iter_mut().zip(grad_out) {
                *g += go;
            }
        }
        grad_in
    }
}

impl<S: Real> Parameterized<S> for Linear<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}

/// `y = xW (+ b)` for a single row or, when `x` holds several rows
/// back-to-back, for each row.
pub fn linear_forward<S: Real>(x: &[S], weight: &ParamTensor<S>, bias: Option<&ParamTensor<S>>) -> Result<Vec<S>> {
    let shape = weight.shape();
    if shape.len() != 2 {
        return Err(Error::shape("linear weight rank", 2, shape.len()));
    }
    let (input, output) = (shape[0], shape[1]);
    if input == 0 || !x.len().is_multiple_of(input) {
        return Err(Error::shape("linear input", format!("multiple of {input}"), x.len()));
    }
    if let Some(b) = bias {
        if b.len() != output {
            return Err(Error::shape("linear bias", output, b.len()));
        }
    }
    let w = weight.values();
    let mut y = Vec::with_capacity(x.len() / input * output);
    for row in x.chunks_exact(input) {
        let start = y.len();
        match bias {
            Some(b) => y.extend_from_slice(b.values()),
            None => y.resize(start + output, S::zero()),
        }
        let out = &mut y[start..];
        for (i, &xi) in row.iter().enumerate() {
            if xi == S::zero() {
                continue;
            }
            for (o, &wij) in out.iter_mut().zip(&w[i * output..(i + 1) * output]) {
                *o += xi * wij;
            }
        }
    }
    Ok(y)
}

use serde::{Deserialize, Serialize};

use super::Real;
use crate::{Error, Result};

/// A named learnable tensor with its gradient accumulator.
///
/// Values and gradients always have the same length; the fields are private
/// so the invariant cannot be broken from outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor<S> {
    name: String,
    shape: Vec<usize>,
    values: Vec<S>,
    grad: Vec<S>,
}

impl<S: Real> ParamTensor<S> {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { name: name.into(), shape: shape.to_vec(), values: vec![S::zero(); n], grad: vec![S::zero(); n] }
    }

    pub fn from_values(name: impl Into<String>, shape: &[usize], values: Vec<S>) -> Result<Self> {
        let name = name.into();
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::shape(format!("parameter {name}"), n, values.len()));
        }
        Ok(Self { name, shape: shape.to_vec(), grad: vec![S::zero(); n], values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn grad(&self) -> &[S] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [S] {
        &mut self.grad
    }

    /// Simultaneous access for optimizers.
    pub fn values_and_grad_mut(&mut self) -> (&mut [S], &mut [S]) {
        (&mut self.values, &mut self.grad)
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = S::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.grad).all(|v| v.is_finite())
    }

    pub fn set_values(&mut self, values: &[S]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::shape(format!("parameter {}", self.name), self.values.len(), values.len()));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    /// Converts to another element type; gradients are reset.
    pub fn cast<T: Real>(&self) -> ParamTensor<T> {
        ParamTensor {
            name: self.name.clone(),
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| T::lit(v.as_f64())).collect(),
            grad: vec![T::zero(); self.values.len()],
        }
    }
}

/// Anything that owns learnable tensors.
pub trait Parameterized<S: Real> {
    fn params(&self) -> Vec<&ParamTensor<S>>;
    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

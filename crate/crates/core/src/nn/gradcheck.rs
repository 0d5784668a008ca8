//! Central finite-difference gradient checking.

use serde::Serialize;

use super::{ParamTensor, Real};
use crate::Result;

/// A scalar function of a set of tensors with an analytic gradient.
///
/// Inputs that should be checked are exposed as tensors alongside the
/// parameters.
pub trait GradTarget<S: Real> {
    fn num_tensors(&self) -> usize;
    fn tensor_mut(&mut self, index: usize) -> &mut ParamTensor<S>;
    /// Forward pass only.
    fn value(&mut self) -> Result<S>;
    /// Zeroes gradients, runs forward and backward, leaves gradients in the
    /// tensors and returns the value.
    fn value_and_grad(&mut self) -> Result<S>;
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error, so near-zero gradients are
    /// compared on an absolute scale.
    pub abs_floor: f64,
    /// Check at most this many coordinates per tensor (evenly strided).
    pub max_coords_per_tensor: Option<usize>,
}

impl GradCheckConfig {
    /// Pure `f64` differencing.
    pub fn f64_mode() -> Self {
        Self { step: 1e-5, tolerance: 1e-5, abs_floor: 1e-4, max_coords_per_tensor: None }
    }

    /// Pure `f32` differencing; the large step and floor absorb the
    /// rounding noise of a single-precision forward pass.
    pub fn f32_mode() -> Self {
        Self { step: 1e-2, tolerance: 1e-3, abs_floor: 1e-2, max_coords_per_tensor: None }
    }

    /// For [`grad_check_against`]: an `f32` backward pass judged at the
    /// single-precision tolerance against an `f64` reference.
    pub fn f32_reference() -> Self {
        Self { step: 1e-5, tolerance: 1e-3, abs_floor: 1e-4, max_coords_per_tensor: None }
    }

    pub fn with_max_coords(mut self, n: usize) -> Self {
        self.max_coords_per_tensor = Some(n);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorError {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub op_name: String,
    pub max_rel_error: f64,
    pub per_parameter: Vec<TensorError>,
    pub passed: bool,
    pub tolerance: f64,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Checks the analytic gradient of `target` against central differences of
/// `target` itself.
pub fn grad_check<S: Real, T: GradTarget<S> + ?Sized>(
    op_name: &str,
    target: &mut T,
    config: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let analytic = analytic_grads(target)?;
    compare(op_name, &analytic, target, config)
}

/// Checks the analytic gradient of `target` against central differences of
/// `reference`, a higher-precision twin with the same tensors in the same
/// order. This separates errors in the backward pass from the rounding noise
/// of differencing a low-precision forward pass.
pub fn grad_check_against<S, T, R, U>(
    op_name: &str,
    target: &mut T,
    reference: &mut U,
    config: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    S: Real,
    R: Real,
    T: GradTarget<S> + ?Sized,
    U: GradTarget<R> + ?Sized,
{
    let analytic = analytic_grads(target)?;
    if analytic.len() != reference.num_tensors() {
        return Err(crate::Error::shape("reference tensors", analytic.len(), reference.num_tensors()));
    }
    compare(op_name, &analytic, reference, config)
}

fn analytic_grads<S: Real, T: GradTarget<S> + ?Sized>(target: &mut T) -> Result<Vec<Vec<f64>>> {
    target.value_and_grad()?;
    Ok((0..target.num_tensors()).map(|i| target.tensor_mut(i).grad().iter().map(|g| g.as_f64()).collect()).collect())
}

fn compare<S: Real, T: GradTarget<S> + ?Sized>(
    op_name: &str,
    analytic: &[Vec<f64>],
    target: &mut T,
    config: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut per_parameter = Vec::with_capacity(analytic.len());
    for (i, grads) in analytic.iter().enumerate() {
        let len = grads.len();
        let stride = match config.max_coords_per_tensor {
            Some(m) if m > 0 && len > m => len.div_ceil(m),
            _ => 1,
        };
        let mut worst = 0.0f64;
        let mut checked = 0;
        for j in (0..len).step_by(stride) {
            let original = target.tensor_mut(i).values()[j];
            let h = S::lit(config.step);
            target.tensor_mut(i).values_mut()[j] = original + h;
            let plus = target.value()?;
            target.tensor_mut(i).values_mut()[j] = original - h;
            let minus = target.value()?;
            target.tensor_mut(i).values_mut()[j] = original;
            // the step actually taken, after rounding in S
            let taken = ((original + h) - (original - h)).as_f64();
            let numeric = (plus - minus).as_f64() / taken;
            worst = worst.max(relative_error(grads[j], numeric, config.abs_floor));
            checked += 1;
        }
        per_parameter.push(TensorError {
            name: target.tensor_mut(i).name().to_string(),
            checked,
            max_rel_error: worst,
        });
    }
    let max_rel_error = per_parameter.iter().map(|p| p.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        op_name: op_name.to_string(),
        max_rel_error,
        per_parameter,
        passed: max_rel_error <= config.tolerance,
        tolerance: config.tolerance,
    })
}

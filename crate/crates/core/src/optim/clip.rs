use crate::nn::{ParamTensor, Real};
use crate::{Error, Result};

pub fn global_grad_norm<S: Real>(params: &[&mut ParamTensor<S>]) -> f64 {
    params
        .iter()
        .flat_map(|p| p.grad().iter())
        .map(|g| {
            let g = g.as_f64();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the scale applied (1.0 when no clipping was needed).
pub fn clip_grad_norm<S: Real>(params: &mut [&mut ParamTensor<S>], max_norm: f64) -> Result<f64> {
    if !(max_norm > 0.0) {
        return Err(Error::Config(format!("max_norm must be > 0, got {max_norm}")));
    }
    let norm = global_grad_norm(params);
    if !norm.is_finite() {
        return Err(Error::NonFinite("global gradient norm".into()));
    }
    if norm <= max_norm {
        return Ok(1.0);
    }
    let scale = max_norm / norm;
    let s = S::lit(scale);
    for p in params.iter_mut() {
        p.grad_mut().iter_mut().for_each(|g| *g *= s);
    }
    Ok(scale)
}

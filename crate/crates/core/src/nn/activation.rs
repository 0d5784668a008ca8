use super::Real;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact (erf-based) GELU.
pub fn gelu<S: Real>(x: S) -> S {
    S::lit(0.5) * x * (S::one() + (x * S::lit(std::f64::consts::FRAC_1_SQRT_2)).erf())
}

/// d/dx GELU(x) = Φ(x) + x·φ(x).
pub fn gelu_grad<S: Real>(x: S) -> S {
    let cdf = S::lit(0.5) * (S::one() + (x * S::lit(std::f64::consts::FRAC_1_SQRT_2)).erf());
    let pdf = S::lit(FRAC_1_SQRT_2PI) * (-(x * x) * S::lit(0.5)).exp();
    cdf + x * pdf
}

pub fn sigmoid<S: Real>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Numerically stable log σ(x).
pub fn log_sigmoid<S: Real>(x: S) -> S {
    let neg_abs = -x.abs();
    x.min(S::zero()) - neg_abs.exp().ln_1p()
}

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use half::f16;
use num_traits::{Float, FromPrimitive};

/// Floating-point element type of the numeric core (`f32` or `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn erf(self) -> Self;
    fn from_f16(v: f16) -> Self;
    fn as_f64(self) -> f64;

    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self;
}

impl Real for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
    fn from_f16(v: f16) -> Self {
        v.to_f32()
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn lit(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn from_f16(v: f16) -> Self {
        v.to_f64()
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn lit(v: f64) -> Self {
        v
    }
}

//! Scalar abstraction shared by the matrix kernel, the state metrics and the
//! channel/theory layers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Validation tolerance for Hermiticity, trace and positivity checks.
    fn tol() -> Self;

    /// Convert an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    #[inline]
    fn tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    #[inline]
    fn tol() -> Self {
        2e-5
    }
}

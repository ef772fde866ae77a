//! Scalar abstraction shared by the generic modules.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point type the generic solver runs on.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + Display
    + Debug
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Largest accepted `‖AᵗA − I‖_F` for a value of an orthogonal field.
    fn ortho_tol() -> Self;
    /// Off-diagonal threshold of the one-sided Jacobi sweeps.
    fn jacobi_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float")
    }
}

impl Real for f64 {
    fn ortho_tol() -> Self {
        1e-10
    }
    fn jacobi_tol() -> Self {
        1e-14
    }
}

impl Real for f32 {
    fn ortho_tol() -> Self {
        1e-4
    }
    fn jacobi_tol() -> Self {
        f32::EPSILON
    }
}

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Signed};

/// Floating point scalar accepted by the curve, spline and curvature kernels.
pub trait Real: Float + FloatConst + FromPrimitive + Signed + Debug + Default + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Relative closeness with an absolute floor of `tol`.
#[inline]
pub fn close<T: Real>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()))
}

//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra as na;
use num_traits as nt;

/// Floating point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    na::RealField
    + Copy
    + nt::FloatConst
    + nt::ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        na::convert(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dot product of two equally long slices.
#[inline]
pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

#[inline]
pub fn norm2<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<S: Real>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub fn max_abs<S: Real>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, x| m.max(x.abs()))
}

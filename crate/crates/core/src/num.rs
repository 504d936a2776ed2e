//! Scalar abstraction for the numeric core.
//!
//! Everything downstream is generic over [`Real`], so the whole pipeline can
//! run in `f32` or `f64`. The shipped tolerances are calibrated for `f64`;
//! `f32` is usable for exploratory sweeps only.

use num_complex::Complex;
use std::fmt::{Debug, Display};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` literals (tolerances, grid constants).
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("f64 constant not representable")
    }

    /// Conversion from integer counts.
    fn of_usize(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize not representable")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the generic scalar.
pub type C<T> = Complex<T>;

pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

pub fn cre<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `i` as a complex constant.
pub fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

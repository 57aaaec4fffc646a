//! Scalar abstraction shared by every numerical module.
//!
//! All of the math is written once against [`Real`] and instantiated for
//! `f32` and `f64`. Literals go through [`Real::lit`] so generic code reads
//! close to the concrete formulas.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating point scalar usable by the solvers.
pub trait Real:
    Float + FloatConst + FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the target precision.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal fits every Real")
    }

    #[inline]
    fn idx(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize fits every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

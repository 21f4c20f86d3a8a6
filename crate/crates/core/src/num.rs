//! Scalar abstraction shared by every simulation routine.
//!
//! All amplitudes are `Complex<T>` for a real scalar `T`. `f64` is the
//! working precision for experiments; `f32` is supported for memory-bound
//! sweeps where the looser tolerances are acceptable.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub use num_complex::Complex;

/// Real scalar usable by the walk operators, observables and eigensolver.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + RealField
    + Copy
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for constants and sampled phases.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i·theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(Float::cos(theta), Float::sin(theta))
}

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_tau<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let r = theta % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

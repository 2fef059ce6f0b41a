//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// All operators live on `Complex<Self>`. `f64` is the working precision for
/// optimization; `f32` is supported for cheap evaluation only.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values unrepresentable in `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn lit_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{i x}`.
#[inline]
pub fn cis<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

/// Argument of `z` with the convention `arg(0) = 0`.
#[inline]
pub fn arg<T: Real>(z: Complex<T>) -> T {
    if z.re == T::zero() && z.im == T::zero() {
        T::zero()
    } else {
        z.im.atan2(z.re)
    }
}

#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

#[inline]
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let pi = T::pi();
    let k = ((x - pi) / two_pi).ceil();
    let w = x - k * two_pi;
    // guard the half-open boundary against rounding
    if w <= -pi {
        w + two_pi
    } else if w > pi {
        w - two_pi
    } else {
        w
    }
}

//! Numeric abstractions shared by the signal path and the timing model.

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign};

/// Floating-point sample type carried through waveforms, the channel and the
/// receiver. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from `f64`, used for physical constants and parameters.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Number type used for slot and frame durations.
///
/// Floating types are convenient for signal math; `Rational64` keeps the
/// reciprocal identities of the rate model exact.
pub trait TimeScalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u32) -> Self;
    fn approx_f64(&self) -> f64;
}

impl TimeScalar for f64 {
    fn from_count(n: u32) -> Self {
        f64::from(n)
    }
    fn approx_f64(&self) -> f64 {
        *self
    }
}

impl TimeScalar for f32 {
    fn from_count(n: u32) -> Self {
        n as f32
    }
    fn approx_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl TimeScalar for Rational64 {
    fn from_count(n: u32) -> Self {
        Rational64::from_integer(i64::from(n))
    }
    fn approx_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Rounds `x` to the nearest integer when it is within a relative 1e-9 of it.
pub(crate) fn near_integer(x: f64) -> Option<u64> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as u64)
    } else {
        None
    }
}

/// Sample count for a span, treating values within rounding noise of an
/// integer as that integer before taking the ceiling.
pub(crate) fn ceil_count(x: f64) -> usize {
    match near_integer(x) {
        Some(n) => n as usize,
        None => x.ceil() as usize,
    }
}

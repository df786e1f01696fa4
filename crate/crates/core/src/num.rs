//! Scalar abstraction and log-domain helpers.
//!
//! Everything numeric in the crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar usable throughout the receiver: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Sum + Debug + Display
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Sum + Debug + Display
{
}

/// Complex sample type.
pub type Cplx<T> = Complex<T>;

/// Log-sum-exp flavour used by the trellis recursions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogSum {
    /// `ln(e^a + e^b)` evaluated exactly.
    #[default]
    Exact,
    /// `max(a, b)`, the max-log approximation.
    MaxLog,
}

impl LogSum {
    /// Combines a slice of log-domain values.
    #[inline]
    pub fn reduce<T: Real>(self, values: &[T]) -> T {
        match self {
            LogSum::Exact => log_sum_exp(values),
            LogSum::MaxLog => values
                .iter()
                .copied()
                .fold(T::neg_infinity(), |a, b| if b > a { b } else { a }),
        }
    }

    /// Combines two log-domain values.
    #[inline]
    pub fn pair<T: Real>(self, a: T, b: T) -> T {
        match self {
            LogSum::Exact => log_add(a, b),
            LogSum::MaxLog => a.max(b),
        }
    }
}

/// `ln(e^a + e^b)` without overflow; `-inf` is the identity.
#[inline]
pub fn log_add<T: Real>(a: T, b: T) -> T {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(v)))` over a slice. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
#[inline]
pub fn log_sum_exp<T: Real>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Shifts a log-domain row so that its exponentials sum to one.
/// Returns the subtracted normaliser.
#[inline]
pub fn normalize_log<T: Real>(row: &mut [T]) -> T {
    let norm = log_sum_exp(row);
    if norm.is_finite() {
        for v in row.iter_mut() {
            *v = *v - norm;
        }
    }
    norm
}

/// `ln(1 + e^x)` evaluated stably for large `|x|`.
#[inline]
pub fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Squared magnitude of `a - b`.
#[inline]
pub fn dist_sqr<T: Real>(a: Cplx<T>, b: Cplx<T>) -> T {
    (a - b).norm_sqr()
}

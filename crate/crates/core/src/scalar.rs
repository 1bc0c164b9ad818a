//! Floating-point abstraction shared by every numeric routine in the crate.
//!
//! All model code is written against [`Scalar`] so the same estimator runs in
//! `f64` (the default, used by the CLI) or `f32` (for memory-bound batch work).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Bundle of bounds required of the scalar type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::ops::DivAssign
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for the constants used here.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// Lossy conversion used for diagnostics and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bound applied to linear predictors before `exp`.
    ///
    /// 700 for `f64`; narrower types use `ln(MAX) - 8` so `exp` stays finite.
    fn lp_bound() -> Self {
        let native = Self::max_value().ln() - Self::lit(8.0);
        native.min(Self::lit(700.0))
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}

/// Clamps a linear predictor to `±T::lp_bound()`. Returns the clamped value
/// and whether clamping happened.
#[inline]
pub fn clamp_lp<T: Scalar>(lp: T) -> (T, bool) {
    let b = T::lp_bound();
    if lp > b {
        (b, true)
    } else if lp < -b {
        (-b, true)
    } else {
        (lp, false)
    }
}

/// `exp` of a clamped linear predictor.
#[inline]
pub fn exp_lp<T: Scalar>(lp: T) -> T {
    clamp_lp(lp).0.exp()
}

/// Dot product of two equal-length slices.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `log(sum(exp(v)))` over the finite-or-`-inf` entries of `v`.
pub fn log_sum_exp<T: Scalar>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() || !m.is_finite() {
        return m;
    }
    let s: T = v.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(it: I) -> T {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_bound_keeps_exp_finite() {
        assert_eq!(f64::lp_bound(), 700.0);
        assert!(f32::lp_bound().exp().is_finite());
        assert_eq!(clamp_lp(1e4_f64), (700.0, true));
        assert_eq!(clamp_lp(-3.0_f64), (-3.0, false));
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        let v = [f64::NEG_INFINITY, 0.0, 0.0_f64.ln_1p()];
        assert!((log_sum_exp(&v) - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}

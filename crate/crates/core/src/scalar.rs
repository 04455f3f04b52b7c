//! Scalar abstractions.
//!
//! Deterministic math (coefficients, constants, test functions, Brownian
//! functionals) is written against [`Real`], so it runs in `f32` or `f64`.
//! The exact oracle is written against [`ExactScalar`], which additionally
//! admits arbitrary-precision rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy literal conversion.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize fits in a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar for exact enumeration and moment recursions.
///
/// Implemented for `f64` and for `num_rational::BigRational`.
pub trait ExactScalar:
    Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}

impl<T> ExactScalar for T where
    T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}

pub(crate) fn exact_from_f64<T: ExactScalar>(x: f64) -> T {
    T::from_f64(x).expect("finite value")
}

pub(crate) fn exact_from_usize<T: ExactScalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable")
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum<F> {
    sum: F,
    comp: F,
}

impl<F: Real> KahanSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            comp: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum + self.comp
    }
}

/// Pairwise (cascade) summation. The result depends only on the slice
/// contents and order, never on how the slice was produced.
pub fn pairwise_sum<F: Real>(xs: &[F]) -> F {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = F::zero();
        for &x in xs {
            s = s + x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = KahanSum::<f64>::new();
        k.add(1e16);
        for _ in 0..1000 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.value(), 1000.0);
    }

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 50_005_000.0);
        let ys: Vec<f32> = vec![0.5; 64];
        assert_eq!(pairwise_sum(&ys), 32.0);
    }
}

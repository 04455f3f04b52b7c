//! Step-reinforced random walks and elephant random walks.
//!
//! Deterministic math is generic over [`scalar::Real`] (`f32`, `f64`); the
//! exact oracle is generic over [`scalar::ExactScalar`], which includes
//! arbitrary-precision rationals. Path simulation runs in `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asclt;
pub mod bm;
pub mod coeffs;
pub mod error;
pub mod exact;
pub mod parallel;
pub mod reinforce;
pub mod scalar;
pub mod steps;
pub mod strongapprox;
pub mod verify;

pub use error::{Error, Result};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type CoeffTable64 = coeffs::CoeffTable<f64>;
pub type CoeffTable32 = coeffs::CoeffTable<f32>;
pub type Schedule64 = coeffs::NormalizationSchedule<f64>;
pub type ExactDistribution64 = exact::ExactDistribution<f64>;
pub type ExactDistributionQ = exact::ExactDistribution<Rational>;
pub type TestFunction64 = asclt::TestFunction<f64>;
pub type AscltAccumulator64 = asclt::AscltAccumulator<f64>;
pub type BmPath64 = bm::BmPath<f64>;
pub type LilTracker64 = strongapprox::LilTracker<f64>;

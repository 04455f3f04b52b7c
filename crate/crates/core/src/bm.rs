//! Brownian paths on a time grid.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::parallel::{path_rng, PathRng};
use crate::scalar::Real;

/// `W` sampled at `0 = t_0 < t_1 < …`, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct BmPath<F> {
    times: Vec<F>,
    values: Vec<F>,
}

impl<F: Real> BmPath<F> {
    /// Builds a path from given samples; `times[0]` must be `0` with `values[0] = 0`.
    pub fn from_samples(times: Vec<F>, values: Vec<F>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Grid(
                "times and values must have equal, non-zero length".into(),
            ));
        }
        if times[0] != F::zero() || values[0] != F::zero() {
            return Err(Error::Grid("path must start at W(0) = 0".into()));
        }
        check_increasing(&times)?;
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn horizon(&self) -> F {
        self.times[self.times.len() - 1]
    }

    /// `c·W`.
    pub fn scaled(&self, c: F) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Pointwise `αW₁ + βW₂` on a shared grid.
    pub fn combine(&self, alpha: F, other: &Self, beta: F) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Grid("paths live on different grids".into()));
        }
        Ok(Self {
            times: self.times.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        })
    }

    /// `W(t)` by linear interpolation; no extrapolation past the horizon.
    pub fn value_at(&self, t: F) -> Result<F> {
        if !(t >= F::zero()) || t > self.horizon() {
            return Err(Error::Grid(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        let i = self.times.partition_point(|&s| s <= t);
        Ok(self.interpolate(i, t))
    }

    /// As [`value_at`](Self::value_at) for nondecreasing `t`, resuming the
    /// grid search from `cursor`.
    pub fn value_at_from(&self, t: F, cursor: &mut usize) -> Result<F> {
        if !(t >= F::zero()) || t > self.horizon() {
            return Err(Error::Grid(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        if *cursor > 0 && self.times[(*cursor).min(self.times.len()) - 1] > t {
            *cursor = 0;
        }
        while *cursor < self.times.len() && self.times[*cursor] <= t {
            *cursor += 1;
        }
        Ok(self.interpolate(*cursor, t))
    }

    /// `i` is the first grid index with `times[i] > t`.
    fn interpolate(&self, i: usize, t: F) -> F {
        if i >= self.times.len() {
            return self.values[self.values.len() - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (w0, w1) = (self.values[i - 1], self.values[i]);
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }
}

fn check_increasing<F: Real>(grid: &[F]) -> Result<()> {
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Grid(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Samples `W` at the positive, strictly increasing `grid` with independent
/// Gaussian increments.
pub fn simulate_bm_with<F: Real>(grid: &[F], rng: &mut PathRng) -> Result<BmPath<F>> {
    if grid.is_empty() {
        return Err(Error::Grid("empty grid".into()));
    }
    if !(grid[0] > F::zero()) {
        return Err(Error::Grid("grid must start after 0".into()));
    }
    check_increasing(grid)?;
    let mut times = Vec::with_capacity(grid.len() + 1);
    let mut values = Vec::with_capacity(grid.len() + 1);
    times.push(F::zero());
    values.push(F::zero());
    let mut w = 0.0f64;
    let mut prev = 0.0f64;
    for &t in grid {
        let tf = t.as_f64();
        let z: f64 = StandardNormal.sample(rng);
        w += (tf - prev).sqrt() * z;
        prev = tf;
        times.push(t);
        values.push(F::lit(w));
    }
    Ok(BmPath { times, values })
}

/// `simulate_bm(grid, seed)`: replicate 0 of `seed`.
pub fn simulate_bm<F: Real>(grid: &[F], seed: u64) -> Result<BmPath<F>> {
    simulate_bm_replicate(grid, seed, 0)
}

pub fn simulate_bm_replicate<F: Real>(grid: &[F], seed: u64, replicate: u64) -> Result<BmPath<F>> {
    let mut rng = path_rng(seed, replicate);
    simulate_bm_with(grid, &mut rng)
}

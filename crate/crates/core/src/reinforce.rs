//! Streaming engine for positively and negatively step-reinforced walks.
//!
//! At time `n >= 2` the walk draws `ε_n ~ Bernoulli(p)`. On failure it takes
//! a fresh (optionally truncated) innovation; on success it picks `U_n`
//! uniformly in `{1, …, n-1}` and replays the realized step `X_{U_n}`
//! (positive mode) or its negation (negative mode).
//!
//! Randomness is consumed in a fixed order per step: one `u64` for `ε_n`
//! (compared against `⌊p·2^64⌋`), then either one `u64` for `U_n` (mapped by
//! 128-bit multiply-high, no rejection) or the draws of one fresh innovation.
//! Step 1 consumes only the fresh innovation.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::coeffs::Mode;
use crate::error::{Error, Result};
use crate::parallel::{path_rng, PathRng};
use crate::steps::{sample_step, truncate, StepDistribution, TruncationRule};

/// Parameters of one reinforced walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub mode: Mode,
    pub p: f64,
    #[serde(default)]
    pub dist: StepDistribution,
    #[serde(default)]
    pub truncation: TruncationRule,
    #[serde(default)]
    pub track_counts: bool,
    #[serde(default = "default_true")]
    pub track_com: bool,
}

fn default_true() -> bool {
    true
}

impl WalkConfig {
    pub fn new(mode: Mode, p: f64, dist: StepDistribution) -> Result<Self> {
        let c = Self {
            mode,
            p,
            dist,
            truncation: TruncationRule::disabled(),
            track_counts: false,
            track_com: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn rademacher(mode: Mode, p: f64) -> Result<Self> {
        Self::new(mode, p, StepDistribution::Rademacher)
    }

    pub fn with_counts(mut self) -> Self {
        self.track_counts = true;
        self
    }

    pub fn with_truncation(mut self, rule: TruncationRule) -> Self {
        self.truncation = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::param("p", format!("{} is outside [0, 1)", self.p)));
        }
        if self.truncation.enabled && !(self.truncation.alpha > 0.0) {
            return Err(Error::param(
                "alpha",
                "must be positive when truncation is on",
            ));
        }
        self.dist.validate()
    }
}

/// Elephant random walk with memory parameter `q` as a reinforced walk:
/// `q >= 1/2` is positive reinforcement with `p = 2q-1`, `q < 1/2` is
/// negative reinforcement with `p = 1-2q`.
pub fn erw_config(q: f64) -> Result<WalkConfig> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1)")));
    }
    if q >= 0.5 {
        WalkConfig::rademacher(Mode::Positive, 2.0 * q - 1.0)
    } else {
        WalkConfig::rademacher(Mode::Negative, 1.0 - 2.0 * q)
    }
}

#[derive(Debug, Clone)]
enum Store {
    /// `±1` steps, one byte each.
    Signs(Vec<i8>),
    Reals(Vec<f64>),
}

#[derive(Debug, Clone, Default)]
struct CountTracker {
    /// fresh index (0-based) each realized step descends from
    origin: Vec<u32>,
    /// sign of each realized step relative to its fresh ancestor
    sign: Vec<i8>,
    multiplicity: Vec<u64>,
    signed: Vec<i64>,
}

/// Repetition counts of the fresh innovations, indexed by time `j = 1..n`
/// (entry `j-1`). Indices that were copies carry zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionCounts {
    /// `N_j(n)`: number of realized steps descending from innovation `j`.
    pub multiplicity: Vec<u64>,
    /// Signed multiplicity: `N_j(n)` in positive mode, `Δ_j(n)` in negative
    /// mode, so that `S_n = Σ_j signed_j · X_j`.
    pub signed: Vec<i64>,
    /// `true` at the indices that drew a fresh innovation.
    pub fresh: Vec<bool>,
}

/// State of one path.
#[derive(Debug, Clone)]
pub struct Walk {
    config: WalkConfig,
    n: usize,
    store: Store,
    fresh_values: Vec<f64>,
    sum: f64,
    com_sum: f64,
    counts: Option<CountTracker>,
    threshold: u64,
    rng: PathRng,
}

impl Walk {
    /// Fresh path whose randomness is the substream `(seed, replicate)`.
    pub fn new(config: WalkConfig, seed: u64, replicate: u64) -> Result<Self> {
        Self::with_rng(config, path_rng(seed, replicate))
    }

    /// `init(config, seed)`: replicate 0 of `seed`.
    pub fn init(config: WalkConfig, seed: u64) -> Result<Self> {
        Self::new(config, seed, 0)
    }

    pub fn with_rng(config: WalkConfig, rng: PathRng) -> Result<Self> {
        config.validate()?;
        let store = if config.dist.is_rademacher() {
            Store::Signs(Vec::new())
        } else {
            Store::Reals(Vec::new())
        };
        let counts = config.track_counts.then(CountTracker::default);
        // p < 1, so the product stays below 2^64
        let threshold = (config.p * 18_446_744_073_709_551_616.0) as u64;
        Ok(Self {
            config,
            n: 0,
            store,
            fresh_values: Vec::new(),
            sum: 0.0,
            com_sum: 0.0,
            counts,
            threshold,
            rng,
        })
    }

    pub fn reserve(&mut self, additional: usize) {
        match &mut self.store {
            Store::Signs(v) => v.reserve(additional),
            Store::Reals(v) => v.reserve(additional),
        }
    }

    pub fn config(&self) -> &WalkConfig {
        &self.config
    }

    /// Number of steps taken.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `S_n`.
    pub fn position(&self) -> f64 {
        self.sum
    }

    /// `Σ_{k<=n} S_k`.
    pub fn com_sum(&self) -> f64 {
        self.com_sum
    }

    /// Realized step `k` (1-based).
    pub fn realized(&self, k: usize) -> Option<f64> {
        let i = k.checked_sub(1)?;
        match &self.store {
            Store::Signs(v) => v.get(i).map(|&s| s as f64),
            Store::Reals(v) => v.get(i).copied(),
        }
    }

    pub fn realized_values(&self) -> Vec<f64> {
        match &self.store {
            Store::Signs(v) => v.iter().map(|&s| s as f64).collect(),
            Store::Reals(v) => v.clone(),
        }
    }

    /// The innovation (after truncation) drawn at each fresh index, in order.
    pub fn fresh_values(&self) -> &[f64] {
        &self.fresh_values
    }

    #[inline]
    fn fresh(&mut self, n: usize) -> f64 {
        let x = sample_step(&self.config.dist, &mut self.rng);
        truncate(x, n, &self.config.truncation)
    }

    /// Takes one step and returns the realized increment.
    #[inline]
    pub fn advance(&mut self) -> f64 {
        let n = self.n + 1;
        let copy_of = if n > 1 && self.rng.next_u64() < self.threshold {
            let v = self.rng.next_u64();
            Some(((v as u128 * (n - 1) as u128) >> 64) as usize)
        } else {
            None
        };
        let negate = self.config.mode == Mode::Negative;
        let x = match copy_of {
            Some(j) => match &mut self.store {
                Store::Signs(v) => {
                    let s = if negate { -v[j] } else { v[j] };
                    v.push(s);
                    s as f64
                }
                Store::Reals(v) => {
                    let s = if negate { -v[j] } else { v[j] };
                    v.push(s);
                    s
                }
            },
            None => {
                let x = self.fresh(n);
                match &mut self.store {
                    Store::Signs(v) => v.push(x as i8),
                    Store::Reals(v) => v.push(x),
                }
                if self.counts.is_some() {
                    self.fresh_values.push(x);
                }
                x
            }
        };
        if let Some(c) = &mut self.counts {
            match copy_of {
                None => {
                    c.origin.push((n - 1) as u32);
                    c.sign.push(1);
                    c.multiplicity.push(1);
                    c.signed.push(1);
                }
                Some(j) => {
                    let o = c.origin[j];
                    let s = if negate { -c.sign[j] } else { c.sign[j] };
                    c.origin.push(o);
                    c.sign.push(s);
                    c.multiplicity.push(0);
                    c.signed.push(0);
                    c.multiplicity[o as usize] += 1;
                    c.signed[o as usize] += s as i64;
                }
            }
        }
        self.n = n;
        self.sum += x;
        if self.config.track_com {
            self.com_sum += self.sum;
        }
        x
    }

    /// Advances `steps` times, calling `observe(n, S_n, Σ_{k<=n} S_k)` after each.
    pub fn run<O: FnMut(usize, f64, f64)>(&mut self, steps: usize, mut observe: O) {
        self.reserve(steps);
        for _ in 0..steps {
            self.advance();
            observe(self.n, self.sum, self.com_sum);
        }
    }

    /// Advances `steps` times without observation.
    pub fn run_silent(&mut self, steps: usize) {
        self.reserve(steps);
        for _ in 0..steps {
            self.advance();
        }
    }

    /// `G_n = (1/n) Σ_{k<=n} S_k`.
    pub fn center_of_mass(&self) -> Result<f64> {
        if !self.config.track_com {
            return Err(Error::NotTracked("center of mass"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "center of mass needs at least one step"));
        }
        Ok(self.com_sum / self.n as f64)
    }

    pub fn repetition_counts(&self) -> Result<RepetitionCounts> {
        let c = self
            .counts
            .as_ref()
            .ok_or(Error::NotTracked("repetition counts"))?;
        let fresh = c
            .origin
            .iter()
            .enumerate()
            .map(|(i, &o)| o as usize == i)
            .collect();
        Ok(RepetitionCounts {
            multiplicity: c.multiplicity.clone(),
            signed: c.signed.clone(),
            fresh,
        })
    }

    /// `S_n` rebuilt as `Σ_j signed_j · X_j` over the fresh innovations.
    pub fn reconstructed_position(&self) -> Result<f64> {
        let counts = self.repetition_counts()?;
        let mut fresh = self.fresh_values.iter();
        let mut s = 0.0;
        for (j, &is_fresh) in counts.fresh.iter().enumerate() {
            if is_fresh {
                let x = fresh.next().expect("one innovation per fresh index");
                s += counts.signed[j] as f64 * x;
            }
        }
        Ok(s)
    }
}

/// `|S_n|`-scale diagnostic: `max_j N_j(n) / (n^p · LL(n))`.
pub fn max_count_ratio(counts: &RepetitionCounts, n: usize, p: f64) -> f64 {
    let max = counts.multiplicity.iter().copied().max().unwrap_or(0) as f64;
    max / ((n as f64).powf(p) * crate::coeffs::loglog_guard(n as f64))
}

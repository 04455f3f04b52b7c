//! Deterministic coefficients, normalization schedules and limit constants.
//!
//! The martingale weights of a reinforced walk are products
//! `a_n = prod_{k<n} k/(k±p)`. They are kept in log space and built by
//! recursion only; `a_n` underflows and `Γ(n)` overflows long before the
//! table sizes used by the simulations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};

/// Sign of the reinforcement: repeat a past step, or repeat its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Positive,
    Negative,
}

impl Mode {
    /// `+1` for positive reinforcement, `-1` for negative.
    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Mode::Positive => 1,
            Mode::Negative => -1,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "hat" | "pos" => Ok(Mode::Positive),
            "negative" | "check" | "neg" => Ok(Mode::Negative),
            other => Err(Error::param("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Scaling regime of a reinforced walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Positive reinforcement, `p < 1/2`.
    HatSubcritical,
    /// Positive reinforcement, `p = 1/2`.
    HatCritical,
    /// Negative reinforcement, any `p < 1`.
    Check,
}

impl ScheduleKind {
    /// The regime a `(mode, p)` pair falls into, if it has one.
    pub fn for_walk(mode: Mode, p: f64) -> Result<Self> {
        match mode {
            Mode::Negative if (0.0..1.0).contains(&p) => Ok(ScheduleKind::Check),
            Mode::Positive if (0.0..0.5).contains(&p) => Ok(ScheduleKind::HatSubcritical),
            Mode::Positive if p == 0.5 => Ok(ScheduleKind::HatCritical),
            Mode::Positive if (0.5..1.0).contains(&p) => Err(Error::Unsupported(format!(
                "positive reinforcement with p = {p} > 1/2 has no Gaussian regime"
            ))),
            _ => Err(Error::param("p", format!("{p} is outside [0, 1)"))),
        }
    }

    fn check_p<F: Real>(self, p: F) -> Result<()> {
        let half = F::lit(0.5);
        let ok = match self {
            ScheduleKind::HatSubcritical => p >= F::zero() && p < half,
            ScheduleKind::HatCritical => p == half,
            ScheduleKind::Check => p >= F::zero() && p < F::one(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                "p",
                format!("p = {p} does not belong to regime {self:?}"),
            ))
        }
    }
}

/// `LL(x) = log log max(x, e^e)`, so that `LL >= 1` everywhere.
#[inline]
pub fn loglog_guard<F: Real>(x: F) -> F {
    let floor = F::E().exp();
    x.max(floor).ln().ln()
}

/// Log-space table of `a_n` (`â_n` or `ǎ_n`) with cumulative squares `s_n^2`.
#[derive(Debug, Clone)]
pub struct CoeffTable<F> {
    mode: Mode,
    p: F,
    log_a: Vec<F>,
    s2: Vec<F>,
}

/// Builds `a_1..a_{n_max}` by the recursion
/// `log a_{n+1} = log a_n - log((n ± p)/n)` and accumulates `s_n^2 = Σ a_k^2`.
pub fn build_coeff_table<F: Real>(mode: Mode, p: F, n_max: usize) -> Result<CoeffTable<F>> {
    if !(p >= F::zero() && p < F::one()) {
        return Err(Error::param("p", format!("{p} is outside [0, 1)")));
    }
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let signed_p = match mode {
        Mode::Positive => p,
        Mode::Negative => -p,
    };
    let mut log_a = Vec::with_capacity(n_max);
    let mut s2 = Vec::with_capacity(n_max);
    let mut log_acc = KahanSum::new();
    let mut sq_acc = KahanSum::new();
    for n in 1..=n_max {
        if n > 1 {
            let k = F::from_usize_lossy(n - 1);
            log_acc.add(-(signed_p / k).ln_1p());
        }
        let la = log_acc.value();
        sq_acc.add((la + la).exp());
        log_a.push(la);
        s2.push(sq_acc.value());
    }
    Ok(CoeffTable { mode, p, log_a, s2 })
}

impl<F: Real> CoeffTable<F> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn p(&self) -> F {
        self.p
    }

    pub fn n_max(&self) -> usize {
        self.log_a.len()
    }

    fn idx(&self, n: usize) -> Result<usize> {
        if n == 0 || n > self.log_a.len() {
            Err(Error::IndexOutOfRange {
                index: n,
                max: self.log_a.len(),
            })
        } else {
            Ok(n - 1)
        }
    }

    pub fn log_a(&self, n: usize) -> Result<F> {
        Ok(self.log_a[self.idx(n)?])
    }

    pub fn a(&self, n: usize) -> Result<F> {
        Ok(self.log_a(n)?.exp())
    }

    pub fn s2(&self, n: usize) -> Result<F> {
        Ok(self.s2[self.idx(n)?])
    }

    /// `a_n / s_n`.
    pub fn ratio(&self, n: usize) -> Result<F> {
        let i = self.idx(n)?;
        Ok(self.log_a[i].exp() / self.s2[i].sqrt())
    }

    /// Rows `(n, a_n, s_n^2, a_n/s_n)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, F, F, F)> + '_ {
        self.log_a
            .iter()
            .zip(&self.s2)
            .enumerate()
            .map(|(i, (&la, &s2))| {
                let a = la.exp();
                (i + 1, a, s2, a / s2.sqrt())
            })
    }
}

/// `a_n / s_n` for `1 <= n <= n_max`.
pub fn coeff_ratio<F: Real>(table: &CoeffTable<F>, n: usize) -> Result<F> {
    table.ratio(n)
}

fn check_indices<F: Real>(rho1: F, rho2: F) -> Result<()> {
    if !(rho1 > -F::one()) {
        return Err(Error::param("rho1", format!("{rho1} must exceed -1")));
    }
    if !(rho2 >= F::zero()) {
        return Err(Error::param("rho2", format!("{rho2} must be non-negative")));
    }
    Ok(())
}

/// Variance of `∫_0^1 t^ρ1 W(t^ρ2) dt`: `2/((1+ρ1+ρ2)(2+2ρ1+ρ2))`.
pub fn variance_limit<F: Real>(rho1: F, rho2: F) -> Result<F> {
    check_indices(rho1, rho2)?;
    let one = F::one();
    let two = F::lit(2.0);
    Ok(two / ((one + rho1 + rho2) * (two + two * rho1 + rho2)))
}

/// Center-of-mass LIL constant `√2((1+ρ1+ρ2)(2+2ρ1+ρ2))^{-1/2}` for
/// regular-variation indices `ρ1` (of `a_n`) and `ρ2` (of `b_n`).
pub fn lil_constant<F: Real>(rho1: F, rho2: F) -> Result<F> {
    Ok(variance_limit(rho1, rho2)?.sqrt())
}

/// Regular-variation indices `(ρ1, ρ2)` of `(1/a_n, σ² s_n²)` in each regime.
pub fn regular_variation_indices<F: Real>(kind: ScheduleKind, p: F) -> Result<(F, F)> {
    kind.check_p(p)?;
    let one = F::one();
    let two = F::lit(2.0);
    Ok(match kind {
        ScheduleKind::HatSubcritical => (p, one - two * p),
        ScheduleKind::HatCritical => (F::lit(0.5), F::zero()),
        ScheduleKind::Check => (-p, one + two * p),
    })
}

/// LIL constant of the center of mass `G_n` in each regime, obtained by
/// composing [`lil_constant`] with the walk's normalizations.
///
/// `sigma` is `σ` for the hat regimes and `σ̌` for [`ScheduleKind::Check`].
pub fn com_lil_constant<F: Real>(kind: ScheduleKind, p: F, sigma: F) -> Result<F> {
    if !(sigma > F::zero()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    let (rho1, rho2) = regular_variation_indices(kind, p)?;
    let base = lil_constant(rho1, rho2)?;
    Ok(base * walk_lil_constant(kind, p, sigma)?)
}

/// `limsup |S_n - drift| / denom` for the walk itself:
/// `σ/√(1-2p)`, `σ` (critical) or `σ̌/√(1+2p)`.
pub fn walk_lil_constant<F: Real>(kind: ScheduleKind, p: F, sigma: F) -> Result<F> {
    kind.check_p(p)?;
    let one = F::one();
    let two = F::lit(2.0);
    Ok(match kind {
        ScheduleKind::HatSubcritical => sigma / (one - two * p).sqrt(),
        ScheduleKind::HatCritical => sigma,
        ScheduleKind::Check => sigma / (one + two * p).sqrt(),
    })
}

/// Center-of-mass LIL constant of the elephant random walk with memory
/// parameter `q ∈ (0, 3/4)`: `√2/√(3(3-2q)(3-4q))`.
pub fn erw_lil_constant<F: Real>(q: F) -> Result<F> {
    if !(q > F::zero() && q < F::lit(0.75)) {
        return Err(Error::param("q", format!("{q} is outside (0, 3/4)")));
    }
    let three = F::lit(3.0);
    let two = F::lit(2.0);
    let four = F::lit(4.0);
    Ok(two.sqrt() / (three * (three - two * q) * (three - four * q)).sqrt())
}

/// Normalization of a reinforced walk in one of its three regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationSchedule<F> {
    pub kind: ScheduleKind,
    pub p: F,
    /// `σ²` for the hat regimes, `σ̌²` for the check regime.
    pub sigma2: F,
    /// `m₁` for the hat regimes, `μ̌` for the check regime.
    pub drift: F,
}

impl<F: Real> NormalizationSchedule<F> {
    pub fn new(kind: ScheduleKind, p: F, sigma2: F, drift: F) -> Result<Self> {
        kind.check_p(p)?;
        if !(sigma2 > F::zero()) {
            return Err(Error::param("sigma2", "must be positive"));
        }
        Ok(Self {
            kind,
            p,
            sigma2,
            drift,
        })
    }

    fn n(n: usize) -> F {
        F::from_usize_lossy(n)
    }

    /// Asymptotic variance of the walk at time `n`.
    pub fn sigma_n2(&self, n: usize) -> F {
        let nf = Self::n(n);
        let one = F::one();
        let two = F::lit(2.0);
        match self.kind {
            ScheduleKind::HatSubcritical => self.sigma2 * nf / (one - two * self.p),
            ScheduleKind::HatCritical => self.sigma2 * nf * nf.ln(),
            ScheduleKind::Check => self.sigma2 * nf / (one + two * self.p),
        }
    }

    /// Variance scale of the martingale, `a_n^2 σ_n^2` asymptotically.
    pub fn b_n(&self, n: usize) -> F {
        let nf = Self::n(n);
        let one = F::one();
        let two = F::lit(2.0);
        match self.kind {
            ScheduleKind::HatSubcritical => {
                let e = one - two * self.p;
                nf.powf(e) * self.sigma2 / e
            }
            ScheduleKind::HatCritical => nf.ln() * self.sigma2,
            ScheduleKind::Check => {
                let e = one + two * self.p;
                nf.powf(e) * self.sigma2 / e
            }
        }
    }

    /// Log-average weight of term `k`. The critical sum starts at `k = 2`.
    pub fn weight(&self, k: usize) -> F {
        let kf = Self::n(k);
        match self.kind {
            ScheduleKind::HatCritical => {
                if k < 2 {
                    F::zero()
                } else {
                    F::one() / (kf * kf.ln())
                }
            }
            _ => F::one() / kf,
        }
    }

    /// Normalizer of the log average: `log n`, or `log log n` when critical.
    pub fn log_normalizer(&self, n: usize) -> F {
        let nf = Self::n(n);
        match self.kind {
            ScheduleKind::HatCritical => nf.ln().ln(),
            _ => nf.ln(),
        }
    }

    /// First summed index.
    pub fn first_index(&self) -> usize {
        match self.kind {
            ScheduleKind::HatCritical => 2,
            _ => 1,
        }
    }

    /// Center of the walk at time `n`: `n·drift`.
    pub fn center(&self, n: usize) -> F {
        Self::n(n) * self.drift
    }

    /// `(S_n - n·drift)/√σ_n^2`.
    pub fn standardize(&self, n: usize, s: F) -> F {
        (s - self.center(n)) / self.sigma_n2(n).sqrt()
    }
}

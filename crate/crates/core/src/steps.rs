//! Step distributions, their moments, and truncation `Z_n = X_n·1{|X_n| <= n^α}`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

const PROB_TOL: f64 = 1e-12;

/// Law of the i.i.d. innovations `X_n`.
///
/// JSON form: `{"kind":"rademacher"}`, `{"kind":"discrete","values":[..],"probs":[..]}`,
/// `{"kind":"gaussian","mean":m,"sd":s}`, `{"kind":"uniform","lo":a,"hi":b}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepDistribution {
    #[default]
    Rademacher,
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl StepDistribution {
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = StepDistribution::Discrete { values, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        let d = StepDistribution::Gaussian { mean, sd };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = StepDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// Checks the invariants; deserialized values must pass through here.
    pub fn validate(&self) -> Result<()> {
        match self {
            StepDistribution::Rademacher => Ok(()),
            StepDistribution::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::param(
                        "dist",
                        "discrete law needs equally many values and probs",
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("dist.values", "must be finite"));
                }
                if probs.iter().any(|&q| !(q >= 0.0)) {
                    return Err(Error::param("dist.probs", "must be non-negative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::param(
                        "dist.probs",
                        format!("sum to {total}, expected 1"),
                    ));
                }
                Ok(())
            }
            StepDistribution::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(*sd > 0.0) || !sd.is_finite() {
                    return Err(Error::param(
                        "dist.sd",
                        "gaussian needs finite mean and sd > 0",
                    ));
                }
                Ok(())
            }
            StepDistribution::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                    return Err(Error::param("dist", "uniform needs finite lo < hi"));
                }
                Ok(())
            }
        }
    }

    /// Finite support as `(value, probability)` atoms, if the law is discrete.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            StepDistribution::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            StepDistribution::Discrete { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            _ => None,
        }
    }

    pub fn is_rademacher(&self) -> bool {
        matches!(self, StepDistribution::Rademacher)
    }

    /// Integer-valued laws keep partial sums exact in `f64`.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            StepDistribution::Rademacher => true,
            StepDistribution::Discrete { values, .. } => values.iter().all(|v| v.fract() == 0.0),
            _ => false,
        }
    }

    /// `(m₁, m₂)`.
    pub fn moments(&self) -> (f64, f64) {
        match self {
            StepDistribution::Rademacher => (0.0, 1.0),
            StepDistribution::Discrete { values, probs } => {
                let m1 = values.iter().zip(probs).map(|(v, q)| v * q).sum();
                let m2 = values.iter().zip(probs).map(|(v, q)| v * v * q).sum();
                (m1, m2)
            }
            StepDistribution::Gaussian { mean, sd } => (*mean, mean * mean + sd * sd),
            StepDistribution::Uniform { lo, hi } => {
                let m1 = 0.5 * (lo + hi);
                let m2 = (lo * lo + lo * hi + hi * hi) / 3.0;
                (m1, m2)
            }
        }
    }
}

/// Command-line form: `rademacher`, `gaussian:MEAN,SD`, `uniform:LO,HI`,
/// `discrete:V1,V2,..;P1,P2,..`, or the JSON object form.
impl std::str::FromStr for StepDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let d: StepDistribution =
                serde_json::from_str(s).map_err(|e| Error::param("dist", e.to_string()))?;
            d.validate()?;
            return Ok(d);
        }
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |text: &str| -> Result<Vec<f64>> {
            text.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::param("dist", format!("bad number `{t}`")))
                })
                .collect()
        };
        let pair = |text: &str| -> Result<(f64, f64)> {
            match nums(text)?[..] {
                [a, b] => Ok((a, b)),
                _ => Err(Error::param("dist", format!("`{kind}` takes two numbers"))),
            }
        };
        match kind {
            "rademacher" => Ok(StepDistribution::Rademacher),
            "gaussian" | "normal" => pair(args).and_then(|(m, sd)| Self::gaussian(m, sd)),
            "uniform" => pair(args).and_then(|(a, b)| Self::uniform(a, b)),
            "discrete" => {
                let (v, p) = args
                    .split_once(';')
                    .ok_or_else(|| Error::param("dist", "discrete needs `values;probs`"))?;
                Self::discrete(nums(v)?, nums(p)?)
            }
            other => Err(Error::param("dist", format!("unknown law `{other}`"))),
        }
    }
}

/// One draw from `dist`.
#[inline]
pub fn sample_step<R: Rng + ?Sized>(dist: &StepDistribution, rng: &mut R) -> f64 {
    match dist {
        StepDistribution::Rademacher => {
            if rng.next_u64() >> 63 == 0 {
                -1.0
            } else {
                1.0
            }
        }
        StepDistribution::Discrete { values, probs } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (v, q) in values.iter().zip(probs) {
                acc += q;
                if u < acc {
                    return *v;
                }
            }
            // rounding left u above the last cumulative sum
            *values
                .iter()
                .zip(probs)
                .rev()
                .find(|(_, &q)| q > 0.0)
                .map(|(v, _)| v)
                .unwrap_or(&values[values.len() - 1])
        }
        StepDistribution::Gaussian { mean, sd } => {
            let z: f64 = StandardNormal.sample(rng);
            mean + sd * z
        }
        StepDistribution::Uniform { lo, hi } => {
            let u: f64 = rng.random();
            lo + (hi - lo) * u
        }
    }
}

/// Moments entering the three normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMoments {
    pub m1: f64,
    pub m2: f64,
    /// `σ² = m₂ - m₁²`
    pub sigma2: f64,
    /// `μ̌ = (1-p)m₁/(1+p)`
    pub mu_check: f64,
    /// `σ̌² = m₂ - μ̌²`
    pub sigma_check2: f64,
}

impl DerivedMoments {
    /// Rejects degenerate step laws, which have no Gaussian scaling limit.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.sigma2 > 0.0 {
            Ok(())
        } else {
            Err(Error::param(
                "dist",
                format!("degenerate step law (σ² = {})", self.sigma2),
            ))
        }
    }
}

pub fn derived_moments(dist: &StepDistribution, p: f64) -> Result<DerivedMoments> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is outside [0, 1)")));
    }
    let (m1, m2) = dist.moments();
    let mu_check = (1.0 - p) * m1 / (1.0 + p);
    Ok(DerivedMoments {
        m1,
        m2,
        sigma2: m2 - m1 * m1,
        mu_check,
        sigma_check2: m2 - mu_check * mu_check,
    })
}

/// Censoring of large innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRule {
    pub alpha: f64,
    pub enabled: bool,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self::disabled()
    }
}

impl TruncationRule {
    /// `α = 1/(2+δ)` with `δ = 1`.
    pub const DEFAULT_ALPHA: f64 = 1.0 / 3.0;

    pub fn disabled() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            enabled: false,
        }
    }

    pub fn with_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("{alpha} must be positive")));
        }
        Ok(Self {
            alpha,
            enabled: true,
        })
    }

    pub fn enabled_default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            enabled: true,
        }
    }

    /// `n^α`, or `+∞` when disabled.
    #[inline]
    pub fn threshold(&self, n: usize) -> f64 {
        if self.enabled {
            (n as f64).powf(self.alpha)
        } else {
            f64::INFINITY
        }
    }
}

/// `x` if `|x| <= n^α` (or the rule is off), else `0`.
#[inline]
pub fn truncate<F: Real>(x: F, n: usize, rule: &TruncationRule) -> F {
    if !rule.enabled {
        return x;
    }
    if x.abs() <= F::lit(rule.threshold(n)) {
        x
    } else {
        F::zero()
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(E[X·1{|X|<=c}], E[X²·1{|X|<=c}])` for `c = n^α`, in closed form.
pub fn truncated_moments(dist: &StepDistribution, n: usize, rule: &TruncationRule) -> (f64, f64) {
    let c = rule.threshold(n);
    if c.is_infinite() {
        return dist.moments();
    }
    match dist {
        StepDistribution::Rademacher | StepDistribution::Discrete { .. } => {
            let atoms = dist.atoms().expect("discrete law");
            atoms
                .iter()
                .filter(|(v, _)| v.abs() <= c)
                .fold((0.0, 0.0), |(e1, e2), &(v, q)| (e1 + v * q, e2 + v * v * q))
        }
        StepDistribution::Gaussian { mean, sd } => {
            let a = (-c - mean) / sd;
            let b = (c - mean) / sd;
            let mass = std_normal_cdf(b) - std_normal_cdf(a);
            let ey = std_normal_pdf(a) - std_normal_pdf(b);
            let ey2 = mass + a * std_normal_pdf(a) - b * std_normal_pdf(b);
            let e1 = mean * mass + sd * ey;
            let e2 = mean * mean * mass + 2.0 * mean * sd * ey + sd * sd * ey2;
            (e1, e2)
        }
        StepDistribution::Uniform { lo, hi } => {
            let l = lo.max(-c);
            let u = hi.min(c);
            if l >= u {
                return (0.0, 0.0);
            }
            let w = hi - lo;
            (
                (u * u - l * l) / (2.0 * w),
                (u * u * u - l * l * l) / (3.0 * w),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn laws_parse_from_flags() {
        assert_eq!(
            "rademacher".parse::<StepDistribution>().unwrap(),
            StepDistribution::Rademacher
        );
        assert_eq!(
            "gaussian:0.5,2".parse::<StepDistribution>().unwrap(),
            StepDistribution::Gaussian { mean: 0.5, sd: 2.0 }
        );
        assert_eq!(
            "uniform:-1,3".parse::<StepDistribution>().unwrap(),
            StepDistribution::Uniform { lo: -1.0, hi: 3.0 }
        );
        assert_eq!(
            "discrete:-1,2;0.25,0.75"
                .parse::<StepDistribution>()
                .unwrap(),
            StepDistribution::Discrete {
                values: vec![-1.0, 2.0],
                probs: vec![0.25, 0.75]
            }
        );
        let j = r#"{"kind":"gaussian","mean":1,"sd":1}"#;
        assert_eq!(
            j.parse::<StepDistribution>().unwrap(),
            StepDistribution::Gaussian { mean: 1.0, sd: 1.0 }
        );
        for bad in [
            "cauchy",
            "gaussian:1",
            "uniform:2,1",
            "discrete:1,2;0.5",
            "discrete:1",
            r#"{"kind":"uniform","lo":1,"hi":0}"#,
        ] {
            assert!(bad.parse::<StepDistribution>().is_err(), "{bad}");
        }
    }

    #[test]
    fn rademacher_support() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let d = StepDistribution::Rademacher;
        let mut seen = [false; 2];
        for _ in 0..1000 {
            let x = sample_step(&d, &mut rng);
            assert!(x == 1.0 || x == -1.0);
            seen[(x > 0.0) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn point_mass() {
        let d = StepDistribution::discrete(vec![0.0], vec![1.0]).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        assert!((0..100).all(|_| sample_step(&d, &mut rng) == 0.0));
    }

    #[test]
    fn gaussian_sample_mean() {
        let d = StepDistribution::gaussian(0.0, 1.0).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_step(&d, &mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4e-3, "{mean}");
    }

    #[test]
    fn validation_errors() {
        assert!(StepDistribution::discrete(vec![1.0], vec![0.5]).is_err());
        assert!(StepDistribution::discrete(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(StepDistribution::gaussian(0.0, 0.0).is_err());
        assert!(StepDistribution::uniform(1.0, 1.0).is_err());
        assert!(TruncationRule::with_alpha(0.0).is_err());
    }

    #[test]
    fn json_schema() {
        let d: StepDistribution =
            serde_json::from_str(r#"{"kind":"discrete","values":[-1,2],"probs":[0.5,0.5]}"#)
                .unwrap();
        assert_eq!(d.moments(), (0.5, 2.5));
        let d: StepDistribution = serde_json::from_str(r#"{"kind":"rademacher"}"#).unwrap();
        assert!(d.is_rademacher());
        let d: StepDistribution =
            serde_json::from_str(r#"{"kind":"gaussian","mean":1,"sd":2}"#).unwrap();
        assert_eq!(d, StepDistribution::Gaussian { mean: 1.0, sd: 2.0 });
        let s = serde_json::to_string(&StepDistribution::Uniform { lo: -1.0, hi: 1.0 }).unwrap();
        assert_eq!(s, r#"{"kind":"uniform","lo":-1.0,"hi":1.0}"#);
    }

    #[test]
    fn derived_moment_examples() {
        let m = derived_moments(&StepDistribution::Rademacher, 0.7).unwrap();
        assert_eq!(
            (m.m1, m.m2, m.sigma2, m.mu_check, m.sigma_check2),
            (0.0, 1.0, 1.0, 0.0, 1.0)
        );
        // m1 = 1, m2 = 2
        let d = StepDistribution::discrete(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let m = derived_moments(&d, 1.0 / 3.0).unwrap();
        assert_relative_eq!(m.mu_check, 0.5, max_relative = 1e-15);
        assert_relative_eq!(m.sigma_check2, 1.75, max_relative = 1e-15);
        let m = derived_moments(&StepDistribution::gaussian(1.0, 1.0).unwrap(), 0.0).unwrap();
        assert_eq!((m.mu_check, m.sigma_check2), (1.0, 1.0));
        assert_eq!(
            m.sigma_check2,
            m.sigma2 + m.m1 * m.m1 - m.mu_check * m.mu_check
        );
        let pm = StepDistribution::discrete(vec![3.0], vec![1.0]).unwrap();
        assert!(derived_moments(&pm, 0.2)
            .unwrap()
            .require_nondegenerate()
            .is_err());
        assert!(derived_moments(&pm, 1.0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let r = TruncationRule::with_alpha(0.5).unwrap();
        assert_eq!(truncate(5.0f64, 4, &r), 0.0);
        assert_eq!(truncate(1.9f64, 4, &r), 1.9);
        assert_eq!(truncate(5.0f64, 4, &TruncationRule::disabled()), 5.0);
        let r = TruncationRule::enabled_default();
        for n in 1..1000 {
            assert_eq!(truncate(-1.0f64, n, &r), -1.0);
            assert_eq!(truncate(1.0f32, n, &r), 1.0);
        }
    }

    #[test]
    fn truncated_moment_examples() {
        let r = TruncationRule::with_alpha(0.5).unwrap();
        assert_eq!(
            truncated_moments(&StepDistribution::Rademacher, 1, &r),
            (0.0, 1.0)
        );
        let (e1, e2) = truncated_moments(&StepDistribution::uniform(-2.0, 2.0).unwrap(), 1, &r);
        assert_eq!(e1, 0.0);
        assert_relative_eq!(e2, 1.0 / 6.0, max_relative = 1e-15);
        let (e1, e2) =
            truncated_moments(&StepDistribution::gaussian(0.0, 1.0).unwrap(), 1 << 40, &r);
        assert!(e1.abs() < 1e-15);
        assert_relative_eq!(e2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_truncated_moments_match_quadrature() {
        // midpoint rule on [-c, c] against the closed form
        let (mean, sd) = (0.7, 1.3);
        let d = StepDistribution::gaussian(mean, sd).unwrap();
        let r = TruncationRule::with_alpha(0.5).unwrap();
        let n = 3;
        let c = (n as f64).sqrt();
        let m = 200_000;
        let h = 2.0 * c / m as f64;
        let (mut q1, mut q2) = (0.0, 0.0);
        for i in 0..m {
            let x = -c + (i as f64 + 0.5) * h;
            let dens = std_normal_pdf((x - mean) / sd) / sd;
            q1 += x * dens * h;
            q2 += x * x * dens * h;
        }
        let (e1, e2) = truncated_moments(&d, n, &r);
        assert_relative_eq!(e1, q1, max_relative = 1e-8);
        assert_relative_eq!(e2, q2, max_relative = 1e-8);
    }

    #[test]
    fn truncated_moments_converge() {
        let r = TruncationRule::enabled_default();
        let dists = [
            StepDistribution::Rademacher,
            StepDistribution::discrete(vec![-3.0, 0.5, 40.0], vec![0.3, 0.6, 0.1]).unwrap(),
            StepDistribution::gaussian(0.5, 2.0).unwrap(),
            StepDistribution::uniform(-5.0, 20.0).unwrap(),
        ];
        for d in &dists {
            let (m1, m2) = d.moments();
            let (e1, e2) = truncated_moments(d, 1_000_000, &r);
            assert_relative_eq!(e1, m1, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(e2, m2, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn truncate_idempotent_and_odd(x in -100.0f64..100.0, n in 1usize..10_000, alpha in 0.05f64..1.0) {
            let r = TruncationRule::with_alpha(alpha).unwrap();
            let t = truncate(x, n, &r);
            prop_assert_eq!(truncate(t, n, &r), t);
            prop_assert_eq!(truncate(-x, n, &r), -t);
        }
    }
}

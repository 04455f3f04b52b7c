//! Exact laws and moments of reinforced walks.
//!
//! For small `n` the law of `S_n` is obtained by enumerating the
//! reinforcement plans (the joint outcome of `ε_k` and `U_k`), tracing every
//! realized step back to the fresh innovation it copies, and convolving the
//! step law scaled by the resulting signed multiplicities. Above the
//! enumeration cap only the moment recursions are available.
//!
//! Everything here is generic over [`ExactScalar`], so it runs in `f64` or
//! in exact rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::coeffs::{CoeffTable, Mode};
use crate::error::{Error, Result};
use crate::scalar::{exact_from_f64, exact_from_usize, ExactScalar, KahanSum};
use crate::steps::{truncate, truncated_moments, StepDistribution, TruncationRule};

/// Largest `n` for full plan enumeration (`10! ≈ 3.6·10⁶` plans).
pub const ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Fresh,
    /// Replay of the realized step at this (1-based) time.
    CopyOf(usize),
}

/// Joint outcome of `(ε_k, U_k)` for `k = 2..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReinforcementPlan<T> {
    /// `choices[k-2]` is the choice made at time `k`.
    pub choices: Vec<Choice>,
    pub prob: T,
}

impl<T> ReinforcementPlan<T> {
    pub fn n(&self) -> usize {
        self.choices.len() + 1
    }
}

/// Iterator over all `n!` plans of length `n`.
#[derive(Debug, Clone)]
pub struct PlanIter<T> {
    n: usize,
    p: T,
    /// digit for time `k` lives at `k-2` and ranges over `0..k`;
    /// `0` is fresh, `d >= 1` copies time `d`
    digits: Vec<usize>,
    done: bool,
}

impl<T: ExactScalar> PlanIter<T> {
    fn plan(&self) -> ReinforcementPlan<T> {
        let mut prob = T::one();
        let one_minus_p = T::one() - self.p.clone();
        let mut choices = Vec::with_capacity(self.digits.len());
        for (i, &d) in self.digits.iter().enumerate() {
            let k = i + 2;
            if d == 0 {
                prob = prob * one_minus_p.clone();
                choices.push(Choice::Fresh);
            } else {
                prob = prob * self.p.clone() / exact_from_usize::<T>(k - 1);
                choices.push(Choice::CopyOf(d));
            }
        }
        ReinforcementPlan { choices, prob }
    }
}

impl<T: ExactScalar> Iterator for PlanIter<T> {
    type Item = ReinforcementPlan<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.plan();
        // odometer, least significant digit is the last time step
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let k = i + 2;
            if self.digits[i] + 1 < k {
                self.digits[i] += 1;
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        if self.done {
            (0, Some(0))
        } else {
            (1, Some((1..=self.n).product()))
        }
    }
}

/// Every plan of length `n` exactly once.
pub fn enumerate_plans<T: ExactScalar>(n: usize, p: T) -> Result<PlanIter<T>> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::Resource(format!(
            "plan enumeration is capped at n = {ENUMERATION_CAP} (got {n})"
        )));
    }
    if !(p >= T::zero() && p < T::one()) {
        return Err(Error::param("p", "outside [0, 1)"));
    }
    Ok(PlanIter {
        n,
        p,
        digits: vec![0; n.saturating_sub(1)],
        done: false,
    })
}

/// Signed multiplicity `c_j` of each innovation `j = 1..=n` (entry `j-1`),
/// so that `S_n = Σ_j c_j X_j`. Copy indices carry zero; in negative mode
/// every copy hop along a chain flips the sign.
pub fn signed_counts<T>(plan: &ReinforcementPlan<T>, mode: Mode) -> Vec<i64> {
    let n = plan.n();
    let mut origin = Vec::with_capacity(n);
    let mut sign: Vec<i64> = Vec::with_capacity(n);
    let mut counts = vec![0i64; n];
    origin.push(0usize);
    sign.push(1);
    counts[0] = 1;
    for (i, choice) in plan.choices.iter().enumerate() {
        let k = i + 1; // 0-based time
        match *choice {
            Choice::Fresh => {
                origin.push(k);
                sign.push(1);
                counts[k] += 1;
            }
            Choice::CopyOf(j) => {
                let o = origin[j - 1];
                let s = match mode {
                    Mode::Positive => sign[j - 1],
                    Mode::Negative => -sign[j - 1],
                };
                origin.push(o);
                sign.push(s);
                counts[o] += s;
            }
        }
    }
    counts
}

#[derive(Debug, Clone)]
struct AtomKey<T>(T);

impl<T: PartialOrd> PartialEq for AtomKey<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for AtomKey<T> {}

impl<T: PartialOrd> PartialOrd for AtomKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for AtomKey<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // atoms are finite, so the order is total
        self.0.partial_cmp(&other.0).expect("finite atom value")
    }
}

/// Finite probability mass function.
#[derive(Debug, Clone)]
pub struct ExactDistribution<T> {
    atoms: BTreeMap<AtomKey<T>, T>,
}

impl<T: ExactScalar> Default for ExactDistribution<T> {
    fn default() -> Self {
        Self {
            atoms: BTreeMap::new(),
        }
    }
}

impl<T: ExactScalar> ExactDistribution<T> {
    pub fn point(value: T) -> Self {
        let mut d = Self::default();
        d.add_mass(value, T::one());
        d
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, T)>) -> Self {
        let mut d = Self::default();
        for (v, q) in atoms {
            d.add_mass(v, q);
        }
        d
    }

    pub fn add_mass(&mut self, value: T, mass: T) {
        if mass == T::zero() {
            return;
        }
        let slot = self.atoms.entry(AtomKey(value)).or_insert_with(T::zero);
        *slot = slot.clone() + mass;
    }

    /// Adds `weight · other` into `self`. Associative and commutative.
    pub fn merge_scaled(&mut self, other: &Self, weight: &T) {
        for (k, q) in &other.atoms {
            self.add_mass(k.0.clone(), q.clone() * weight.clone());
        }
    }

    /// Law of the sum of independent variables.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (a, pa) in &self.atoms {
            for (b, pb) in &other.atoms {
                out.add_mass(a.0.clone() + b.0.clone(), pa.clone() * pb.clone());
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &T)> {
        self.atoms.iter().map(|(k, q)| (&k.0, q))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob(&self, value: &T) -> T {
        self.atoms
            .get(&AtomKey(value.clone()))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub fn total_mass(&self) -> T {
        self.atoms
            .values()
            .fold(T::zero(), |acc, q| acc + q.clone())
    }

    pub fn mean(&self) -> T {
        self.iter()
            .fold(T::zero(), |acc, (v, q)| acc + v.clone() * q.clone())
    }

    pub fn second_moment(&self) -> T {
        self.iter().fold(T::zero(), |acc, (v, q)| {
            acc + v.clone() * v.clone() * q.clone()
        })
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.second_moment() - m.clone() * m
    }

    /// Atoms converted to `f64`.
    pub fn to_f64_atoms(&self) -> Vec<(f64, f64)> {
        self.iter()
            .map(|(v, q)| {
                (
                    v.to_f64().unwrap_or(f64::NAN),
                    q.to_f64().unwrap_or(f64::NAN),
                )
            })
            .collect()
    }
}

fn step_law<T: ExactScalar>(
    dist: &StepDistribution,
    index: usize,
    rule: &TruncationRule,
    scale: i64,
) -> Result<ExactDistribution<T>> {
    let atoms = dist
        .atoms()
        .ok_or_else(|| Error::param("dist", "exact laws need a finite step distribution"))?;
    let c = T::from_i64(scale).expect("small integer");
    Ok(ExactDistribution::from_atoms(atoms.into_iter().map(
        |(v, q)| {
            let z = truncate(v, index, rule);
            (c.clone() * exact_from_f64::<T>(z), exact_from_f64::<T>(q))
        },
    )))
}

/// Exact law of `S_n` (or `S*_n` under truncation): the mixture over plans
/// of the convolution of the signed-count-scaled step laws.
pub fn exact_distribution<T: ExactScalar>(
    n: usize,
    p: T,
    mode: Mode,
    dist: &StepDistribution,
    rule: &TruncationRule,
) -> Result<ExactDistribution<T>> {
    dist.atoms()
        .ok_or_else(|| Error::param("dist", "exact laws need a finite step distribution"))?;
    // with identically distributed innovations only the multiset of counts matters
    let identical = !rule.enabled;
    let mut by_counts: HashMap<Vec<i64>, T> = HashMap::new();
    for plan in enumerate_plans(n, p)? {
        let counts = signed_counts(&plan, mode);
        let key = if identical {
            let mut k: Vec<i64> = counts.into_iter().filter(|&c| c != 0).collect();
            k.sort_unstable();
            k
        } else {
            counts
        };
        let slot = by_counts.entry(key).or_insert_with(T::zero);
        *slot = slot.clone() + plan.prob;
    }
    let mut keys: Vec<_> = by_counts.into_iter().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = ExactDistribution::default();
    for (counts, mass) in keys {
        let mut law = ExactDistribution::point(T::zero());
        for (j, &c) in counts.iter().enumerate() {
            if c != 0 {
                law = law.convolve(&step_law(dist, j + 1, rule, c)?);
            }
        }
        out.merge_scaled(&law, &mass);
    }
    Ok(out)
}

/// `(E Z_n, E Z_n²)` for `n = 1..=n_max` (entry `n-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct StepMoments<T> {
    pub ez: Vec<T>,
    pub ez2: Vec<T>,
}

pub fn step_moments<T: ExactScalar>(
    dist: &StepDistribution,
    rule: &TruncationRule,
    n_max: usize,
) -> StepMoments<T> {
    let atoms = dist.atoms();
    let mut ez = Vec::with_capacity(n_max);
    let mut ez2 = Vec::with_capacity(n_max);
    let mut cached: Option<(T, T)> = None;
    for n in 1..=n_max {
        if !rule.enabled {
            if let Some((a, b)) = &cached {
                ez.push(a.clone());
                ez2.push(b.clone());
                continue;
            }
        }
        let (a, b) = match &atoms {
            Some(atoms) => atoms
                .iter()
                .fold((T::zero(), T::zero()), |(e1, e2), &(v, q)| {
                    let z: T = exact_from_f64(truncate(v, n, rule));
                    let q: T = exact_from_f64(q);
                    (e1 + z.clone() * q.clone(), e2 + z.clone() * z * q)
                }),
            None => {
                let (a, b) = truncated_moments(dist, n, rule);
                (exact_from_f64(a), exact_from_f64(b))
            }
        };
        if !rule.enabled {
            cached = Some((a.clone(), b.clone()));
        }
        ez.push(a);
        ez2.push(b);
    }
    StepMoments { ez, ez2 }
}

fn reinforcement_sign<T: ExactScalar>(mode: Mode, x: T) -> T {
    match mode {
        Mode::Positive => x,
        Mode::Negative => T::zero() - x,
    }
}

fn check_p<T: ExactScalar>(p: &T) -> Result<()> {
    if *p >= T::zero() && *p < T::one() {
        Ok(())
    } else {
        Err(Error::param("p", "outside [0, 1)"))
    }
}

/// `E S*_n` for `n = 1..=n_max`, from
/// `E S*_{n+1} = ((n ± p)/n) E S*_n + (1-p) E Z_{n+1}`.
pub fn mean_recursion<T: ExactScalar>(
    n_max: usize,
    p: T,
    mode: Mode,
    dist: &StepDistribution,
    rule: &TruncationRule,
) -> Result<Vec<T>> {
    check_p(&p)?;
    let m = step_moments::<T>(dist, rule, n_max);
    Ok(mean_from_moments(&m, p, mode))
}

fn mean_from_moments<T: ExactScalar>(m: &StepMoments<T>, p: T, mode: Mode) -> Vec<T> {
    let n_max = m.ez.len();
    let mut out = Vec::with_capacity(n_max);
    if n_max == 0 {
        return out;
    }
    let one_minus_p = T::one() - p.clone();
    let sp = reinforcement_sign(mode, p);
    let mut e = m.ez[0].clone();
    out.push(e.clone());
    for n in 1..n_max {
        let nf = exact_from_usize::<T>(n);
        e = (nf.clone() + sp.clone()) / nf * e + one_minus_p.clone() * m.ez[n].clone();
        out.push(e.clone());
    }
    out
}

/// `Var S*_n` for `n = 1..=n_max`, from
/// `Var S*_{n+1} = ((n ± 2p)/n) Var S*_n + b_{n+1}` with
/// `b_{n+1} = (p/n) Σ_{k<=n} E Ẑ_k² + (1-p) E Z²_{n+1} - (±(p/n) E S*_n + (1-p) E Z_{n+1})²`.
///
/// `Σ_{k<=n} E Ẑ_k²` follows the mean recursion of the squared steps and is
/// the same in both modes.
pub fn var_recursion<T: ExactScalar>(
    n_max: usize,
    p: T,
    mode: Mode,
    dist: &StepDistribution,
    rule: &TruncationRule,
) -> Result<Vec<T>> {
    check_p(&p)?;
    let m = step_moments::<T>(dist, rule, n_max);
    Ok(var_from_moments(&m, p, mode))
}

fn var_from_moments<T: ExactScalar>(m: &StepMoments<T>, p: T, mode: Mode) -> Vec<T> {
    let n_max = m.ez.len();
    let mut out = Vec::with_capacity(n_max);
    if n_max == 0 {
        return out;
    }
    let one = T::one();
    let two = one.clone() + one.clone();
    let one_minus_p = one.clone() - p.clone();
    let sp = reinforcement_sign(mode, p.clone());
    let mut mean = m.ez[0].clone();
    let mut sq_sum = m.ez2[0].clone();
    let mut var = m.ez2[0].clone() - m.ez[0].clone() * m.ez[0].clone();
    out.push(var.clone());
    for n in 1..n_max {
        let nf = exact_from_usize::<T>(n);
        let cond_mean =
            sp.clone() / nf.clone() * mean.clone() + one_minus_p.clone() * m.ez[n].clone();
        let b = p.clone() / nf.clone() * sq_sum.clone() + one_minus_p.clone() * m.ez2[n].clone()
            - cond_mean.clone() * cond_mean;
        var = (nf.clone() + two.clone() * sp.clone()) / nf.clone() * var + b;
        mean =
            (nf.clone() + sp.clone()) / nf.clone() * mean + one_minus_p.clone() * m.ez[n].clone();
        sq_sum = (nf.clone() + p.clone()) / nf * sq_sum + one_minus_p.clone() * m.ez2[n].clone();
        out.push(var.clone());
    }
    out
}

/// `Var(G_n)` for the center of mass `G_n = (1/n) Σ_{k<=n} S*_k`.
///
/// Uses `Cov(S_j, S_k) = (Π_{i=j}^{k-1} γ_i) Var S_j` for `j < k`, with
/// `γ_i = (i ± p)/i`, which follows from `E(S_{i+1} | F_i) = γ_i S_i + const`.
pub fn com_variance<T: ExactScalar>(
    n: usize,
    p: T,
    mode: Mode,
    dist: &StepDistribution,
    rule: &TruncationRule,
) -> Result<T> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let var = var_recursion(n, p.clone(), mode, dist, rule)?;
    let sp = reinforcement_sign(mode, p);
    let two = T::one() + T::one();
    // tail_j = Σ_{k>j} Π_{i=j}^{k-1} γ_i = γ_j (1 + tail_{j+1})
    let mut tail = T::zero();
    let mut total = T::zero();
    for j in (1..=n).rev() {
        if j < n {
            let jf = exact_from_usize::<T>(j);
            tail = (jf.clone() + sp.clone()) / jf * (T::one() + tail);
        }
        total = total + var[j - 1].clone() * (T::one() + two.clone() * tail.clone());
    }
    let nf = exact_from_usize::<T>(n);
    Ok(total / (nf.clone() * nf))
}

/// Per-path martingale decomposition of `M*_n = a_n (S*_n - E S*_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleDiagnostics {
    /// `Y_n = a_n (Z_n - E(Z_n | F_{n-1}))`
    pub increments: Vec<f64>,
    /// `E(Y_n² | F_{n-1})`
    pub cond_var: Vec<f64>,
    /// `M*_n` computed directly
    pub martingale: Vec<f64>,
    /// `Σ_{k<=n} Y_k`, compensated
    pub telescoped: Vec<f64>,
    /// `(σ² s_n²)^{-1} Σ_{k<=n} E(Y_k² | F_{k-1})`
    pub normalized_cond_var: Vec<f64>,
}

/// Builds the martingale differences of a recorded (truncated) path.
///
/// `realized` holds `Ẑ_1..Ẑ_n`; `sigma2` is `σ²` in positive mode and `σ̌²`
/// in negative mode.
pub fn martingale_transform(
    realized: &[f64],
    p: f64,
    mode: Mode,
    table: &CoeffTable<f64>,
    moments: &StepMoments<f64>,
    sigma2: f64,
) -> Result<MartingaleDiagnostics> {
    let n_max = realized.len();
    if table.mode() != mode || table.p() != p {
        return Err(Error::param("table", "built for a different mode or p"));
    }
    if table.n_max() < n_max || moments.ez.len() < n_max {
        return Err(Error::IndexOutOfRange {
            index: n_max,
            max: table.n_max().min(moments.ez.len()),
        });
    }
    let means = mean_from_moments(moments, p, mode);
    let sp = mode.sign() as f64 * p;
    let mut out = MartingaleDiagnostics {
        increments: Vec::with_capacity(n_max),
        cond_var: Vec::with_capacity(n_max),
        martingale: Vec::with_capacity(n_max),
        telescoped: Vec::with_capacity(n_max),
        normalized_cond_var: Vec::with_capacity(n_max),
    };
    let mut s = 0.0;
    let mut sq = 0.0;
    let mut y_sum = KahanSum::new();
    let mut cv_sum = KahanSum::new();
    for n in 1..=n_max {
        let i = n - 1;
        let (cm, cm2) = if n == 1 {
            (moments.ez[0], moments.ez2[0])
        } else {
            let k = (n - 1) as f64;
            (
                sp / k * s + (1.0 - p) * moments.ez[i],
                p / k * sq + (1.0 - p) * moments.ez2[i],
            )
        };
        let a = table.a(n)?;
        let z = realized[i];
        let y = a * (z - cm);
        let cv = a * a * (cm2 - cm * cm);
        s += z;
        sq += z * z;
        y_sum.add(y);
        cv_sum.add(cv);
        out.increments.push(y);
        out.cond_var.push(cv);
        out.martingale.push(a * (s - means[i]));
        out.telescoped.push(y_sum.value());
        out.normalized_cond_var
            .push(cv_sum.value() / (sigma2 * table.s2(n)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, Zero};

    fn q(x: f64) -> BigRational {
        BigRational::from_f64(x).unwrap()
    }

    #[test]
    fn two_step_plans() {
        let plans: Vec<_> = enumerate_plans(2, 0.3f64).unwrap().collect();
        assert_eq!(plans.len(), 2);
        assert_eq!(plans[0].choices, vec![Choice::Fresh]);
        assert!((plans[0].prob - 0.7).abs() < 1e-15);
        assert_eq!(plans[1].choices, vec![Choice::CopyOf(1)]);
        assert!((plans[1].prob - 0.3).abs() < 1e-15);
    }

    #[test]
    fn plan_counts_and_mass() {
        for n in 1..=8 {
            let plans: Vec<_> = enumerate_plans(n, q(0.3)).unwrap().collect();
            assert_eq!(plans.len(), (1..=n).product::<usize>());
            let total = plans
                .iter()
                .fold(BigRational::zero(), |a, pl| a + pl.prob.clone());
            assert_eq!(total, BigRational::from_integer(1.into()));
        }
        let total: f64 = enumerate_plans(8, 0.3f64).unwrap().map(|p| p.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            enumerate_plans(11, 0.1f64),
            Err(Error::Resource(_))
        ));
        assert!(enumerate_plans(0, 0.1f64).is_err());
        assert!(enumerate_plans(3, 1.0f64).is_err());
    }

    #[test]
    fn signed_count_examples() {
        let fresh = ReinforcementPlan {
            choices: vec![Choice::Fresh; 4],
            prob: 1.0,
        };
        assert_eq!(signed_counts(&fresh, Mode::Negative), vec![1; 5]);
        let copy = ReinforcementPlan {
            choices: vec![Choice::CopyOf(1)],
            prob: 1.0,
        };
        assert_eq!(signed_counts(&copy, Mode::Positive), vec![2, 0]);
        assert_eq!(signed_counts(&copy, Mode::Negative), vec![0, 0]);
        let chain = ReinforcementPlan {
            choices: vec![Choice::CopyOf(1), Choice::CopyOf(2)],
            prob: 1.0,
        };
        assert_eq!(signed_counts(&chain, Mode::Negative), vec![1, 0, 0]);
        assert_eq!(signed_counts(&chain, Mode::Positive), vec![3, 0, 0]);
    }

    #[test]
    fn two_step_laws() {
        let r = TruncationRule::disabled();
        let d = exact_distribution(
            2,
            q(0.25),
            Mode::Positive,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        assert_eq!(d.prob(&q(2.0)), q(0.3125));
        assert_eq!(d.prob(&q(-2.0)), q(0.3125));
        assert_eq!(d.prob(&q(0.0)), q(0.375));
        let d = exact_distribution(
            2,
            q(0.25),
            Mode::Negative,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        assert_eq!(d.prob(&q(0.0)), q(0.625));
        assert_eq!(d.prob(&q(2.0)), q(0.1875));
        let d = exact_distribution(1, 0.4f64, Mode::Positive, &StepDistribution::Rademacher, &r)
            .unwrap();
        assert_eq!(d.to_f64_atoms(), vec![(-1.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn continuous_laws_rejected() {
        let g = StepDistribution::gaussian(0.0, 1.0).unwrap();
        assert!(
            exact_distribution(3, 0.1f64, Mode::Positive, &g, &TruncationRule::disabled()).is_err()
        );
    }

    #[test]
    fn mean_recursion_examples() {
        let r = TruncationRule::disabled();
        let m = mean_recursion(
            50,
            0.3f64,
            Mode::Negative,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        assert!(m.iter().all(|&x| x == 0.0));
        let one = StepDistribution::discrete(vec![1.0], vec![1.0]).unwrap();
        let m = mean_recursion(20, 0.0f64, Mode::Positive, &one, &r).unwrap();
        assert_eq!(m, (1..=20).map(|n| n as f64).collect::<Vec<_>>());
        let m = mean_recursion(3, q(0.5), Mode::Positive, &one, &r).unwrap();
        assert_eq!(m, vec![q(1.0), q(2.0), q(3.0)]);
    }

    #[test]
    fn var_recursion_examples() {
        let r = TruncationRule::disabled();
        let v = var_recursion(
            2,
            q(0.25),
            Mode::Positive,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        assert_eq!(v[1], q(2.5));
        let v = var_recursion(
            100,
            0.0f64,
            Mode::Negative,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        assert_eq!(v, (1..=100).map(|n| n as f64).collect::<Vec<_>>());
        let v = var_recursion(
            100_000,
            0.25f64,
            Mode::Positive,
            &StepDistribution::Rademacher,
            &r,
        )
        .unwrap();
        let scaled = v[99_999] * 0.5 / 1e5;
        assert!((0.99..=1.01).contains(&scaled), "{scaled}");
    }

    #[test]
    fn recursions_match_enumeration_with_truncation() {
        let d = StepDistribution::discrete(vec![-3.0, 1.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        let r = TruncationRule::with_alpha(0.5).unwrap();
        for mode in [Mode::Positive, Mode::Negative] {
            for &p in &[0.0, 0.375, 0.75] {
                let mean = mean_recursion(6, q(p), mode, &d, &r).unwrap();
                let var = var_recursion(6, q(p), mode, &d, &r).unwrap();
                for n in 1..=6 {
                    let law = exact_distribution(n, q(p), mode, &d, &r).unwrap();
                    assert_eq!(law.mean(), mean[n - 1], "mean n={n} p={p} {mode:?}");
                    assert_eq!(law.variance(), var[n - 1], "var n={n} p={p} {mode:?}");
                }
            }
        }
    }

    /// Brute force over plans and all ±1 innovation vectors.
    fn brute_force_com_variance(n: usize, p: f64, mode: Mode) -> f64 {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for plan in enumerate_plans(n, p).unwrap() {
            for bits in 0..(1u32 << n) {
                let x: Vec<f64> = (0..n)
                    .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect();
                let mut realized = vec![x[0]];
                for (i, c) in plan.choices.iter().enumerate() {
                    let v = match *c {
                        Choice::Fresh => x[i + 1],
                        Choice::CopyOf(j) => realized[j - 1] * mode.sign() as f64,
                    };
                    realized.push(v);
                }
                let mut s = 0.0;
                let mut g = 0.0;
                for v in &realized {
                    s += v;
                    g += s;
                }
                g /= n as f64;
                let w = plan.prob / (1u64 << n) as f64;
                m1 += w * g;
                m2 += w * g * g;
            }
        }
        m2 - m1 * m1
    }

    #[test]
    fn com_variance_matches_brute_force() {
        let r = TruncationRule::disabled();
        for mode in [Mode::Positive, Mode::Negative] {
            for &p in &[0.0, 0.3, 0.5, 0.8] {
                for n in 1..=6 {
                    let exact =
                        com_variance(n, p, mode, &StepDistribution::Rademacher, &r).unwrap();
                    let brute = brute_force_com_variance(n, p, mode);
                    assert!(
                        (exact - brute).abs() < 1e-12 * brute.max(1.0),
                        "{mode:?} p={p} n={n}: {exact} vs {brute}"
                    );
                }
            }
        }
    }
}

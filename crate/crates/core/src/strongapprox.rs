//! Brownian functionals and law-of-the-iterated-logarithm statistics.

use serde::{Deserialize, Serialize};

use crate::bm::BmPath;
use crate::coeffs::{
    com_lil_constant, lil_constant, loglog_guard, walk_lil_constant, Mode, ScheduleKind,
};
use crate::error::{Error, Result};
use crate::parallel::path_rng;
use crate::reinforce::{Walk, WalkConfig};
use crate::scalar::{KahanSum, Real};
use crate::steps::DerivedMoments;

/// Nodes of the midpoint rule used by [`integral_functional`] by default.
pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

/// Fewest quadrature nodes accepted.
pub const MIN_QUADRATURE_NODES: usize = 256;

/// `sup_{b_n <= t <= b_{n+1}} |W(t)/√t - W(b_n)/√b_n|` for consecutive
/// schedule points, approximated on `refinement` equal subintervals.
pub fn bridge_sup_check<F: Real>(
    path: &BmPath<F>,
    schedule: &[F],
    refinement: usize,
) -> Result<Vec<F>> {
    if refinement < 2 {
        return Err(Error::param(
            "refinement",
            "need at least 2 subpoints per interval",
        ));
    }
    let horizon = path.horizon();
    if let (Some(&lo), Some(&hi)) = (schedule.first(), schedule.last()) {
        if !(lo > F::zero()) || hi > horizon {
            return Err(Error::Grid(format!(
                "schedule [{lo}, {hi}] outside (0, {horizon}]"
            )));
        }
    }
    let r = F::from_usize_lossy(refinement);
    let mut out = Vec::with_capacity(schedule.len().saturating_sub(1));
    let mut cursor = 0;
    for w in schedule.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b < a {
            return Err(Error::Schedule("schedule must be nondecreasing".into()));
        }
        let base = path.value_at_from(a, &mut cursor)? / a.sqrt();
        let mut sup = F::zero();
        if b > a {
            for j in 1..=refinement {
                let t = (a + (b - a) * F::from_usize_lossy(j) / r).min(horizon);
                let d = (path.value_at_from(t, &mut cursor)? / t.sqrt() - base).abs();
                sup = sup.max(d);
            }
        }
        out.push(sup);
    }
    Ok(out)
}

/// `η(t, s) = W(ts)/√(2t LL t)`.
pub fn eta<F: Real>(path: &BmPath<F>, t: F, s: F) -> Result<F> {
    if !(t > F::zero()) {
        return Err(Error::param("t", "must be positive"));
    }
    let w = path.value_at(t * s)?;
    Ok(w / (F::lit(2.0) * t * loglog_guard(t)).sqrt())
}

fn check_integral_args<F: Real>(rho1: F, rho2: F, nodes: usize) -> Result<()> {
    if !(rho1 > -F::one()) {
        return Err(Error::param("rho1", format!("{rho1} must exceed -1")));
    }
    if !(rho2 >= F::zero()) {
        return Err(Error::param("rho2", format!("{rho2} must be non-negative")));
    }
    if nodes < MIN_QUADRATURE_NODES {
        return Err(Error::param(
            "nodes",
            format!("{nodes} < {MIN_QUADRATURE_NODES} quadrature nodes"),
        ));
    }
    Ok(())
}

/// `∫_0^1 t^ρ1 W(b t^ρ2) dt / √b`.
///
/// With `v = t^{1+ρ1}` the integral becomes
/// `(1+ρ1)^{-1} ∫_0^1 W(b v^{ρ2/(1+ρ1)}) dv`, whose integrand is bounded for
/// every `ρ1 > -1`; it is evaluated by the composite midpoint rule.
pub fn integral_unnormalized<F: Real>(
    path: &BmPath<F>,
    rho1: F,
    rho2: F,
    b: F,
    nodes: usize,
) -> Result<F> {
    check_integral_args(rho1, rho2, nodes)?;
    if !(b > F::zero()) || b > path.horizon() {
        return Err(Error::Grid(format!(
            "b = {b} outside (0, {}]",
            path.horizon()
        )));
    }
    let a = F::one() + rho1;
    let e = rho2 / a;
    let h = F::one() / F::from_usize_lossy(nodes);
    let half = F::lit(0.5);
    let mut acc = KahanSum::new();
    let mut cursor = 0;
    for i in 0..nodes {
        let v = (F::from_usize_lossy(i) + half) * h;
        acc.add(path.value_at_from(b * v.powf(e), &mut cursor)?);
    }
    Ok(acc.value() * h / a / b.sqrt())
}

/// `I_n = ∫_0^1 t^ρ1 W(b_n t^ρ2) dt / √(2 b_n LL b_n)`.
pub fn integral_functional<F: Real>(
    path: &BmPath<F>,
    rho1: F,
    rho2: F,
    b: F,
    nodes: usize,
) -> Result<F> {
    let raw = integral_unnormalized(path, rho1, rho2, b, nodes)?;
    Ok(raw / (F::lit(2.0) * loglog_guard(b)).sqrt())
}

/// Maximizer of `f ↦ ∫_0^1 t^ρ1 f(t^ρ2) dt` over the Strassen ball
/// `{f(0) = 0, ∫ f'² <= 1}`: `f' ∝ 1 - t^c` with `c = (1+ρ1)/ρ2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrassenExtremal<F> {
    pub rho1: F,
    pub rho2: F,
    c: F,
    norm: F,
}

pub fn strassen_extremal<F: Real>(rho1: F, rho2: F) -> Result<StrassenExtremal<F>> {
    if !(rho1 > -F::one()) {
        return Err(Error::param("rho1", format!("{rho1} must exceed -1")));
    }
    if rho2 == F::zero() {
        return Err(Error::Unsupported(
            "ρ2 = 0: the functional is the endpoint value, use eta".into(),
        ));
    }
    if !(rho2 > F::zero()) {
        return Err(Error::param("rho2", format!("{rho2} must be positive")));
    }
    let one = F::one();
    let two = F::lit(2.0);
    let c = (one + rho1) / rho2;
    let norm = (one - two / (c + one) + one / (two * c + one)).sqrt();
    Ok(StrassenExtremal {
        rho1,
        rho2,
        c,
        norm,
    })
}

impl<F: Real> StrassenExtremal<F> {
    pub fn exponent(&self) -> F {
        self.c
    }

    /// `f'(t)`.
    pub fn derivative(&self, t: F) -> F {
        (F::one() - t.powf(self.c)) / self.norm
    }

    /// `f(t) = (t - t^{c+1}/(c+1))/‖1 - t^c‖₂`.
    pub fn value(&self, t: F) -> F {
        let c1 = self.c + F::one();
        (t - t.powf(c1) / c1) / self.norm
    }

    /// Maximum of the functional, `‖1 - t^c‖₂/(1+ρ1)`.
    pub fn extremal_value(&self) -> F {
        self.norm / (F::one() + self.rho1)
    }

    /// `∫_0^1 t^ρ1 f(t^ρ2) dt` at the extremal `f`, in closed form.
    pub fn functional_at_extremal(&self) -> F {
        let one = F::one();
        let two = F::lit(2.0);
        let c = self.c;
        two * c / ((c + one) * (two * c + one)) / self.norm / self.rho2
    }

    /// `∫_0^1 t^ρ1 f(t^ρ2) dt = ρ2^{-1} ∫_0^1 x^{c-1} f(x) dx` for an
    /// arbitrary `f`, by the midpoint rule after `x = w^{2/c}`.
    pub fn apply_functional(&self, f: impl Fn(F) -> F, nodes: usize) -> F {
        let two = F::lit(2.0);
        let h = F::one() / F::from_usize_lossy(nodes.max(1));
        let mut acc = KahanSum::new();
        for i in 0..nodes.max(1) {
            let w = (F::from_usize_lossy(i) + F::lit(0.5)) * h;
            acc.add(f(w.powf(two / self.c)) * w);
        }
        acc.value() * h * two / self.c / self.rho2
    }

    /// The functional for `g` with `g'` equal to `slopes[i]` on the i-th of
    /// `slopes.len()` equal subintervals: `(1+ρ1)^{-1} ∫ g'(t)(1 - t^c) dt`.
    pub fn functional_piecewise(&self, slopes: &[F]) -> F {
        let m = F::from_usize_lossy(slopes.len());
        let c1 = self.c + F::one();
        let antider = |t: F| t - t.powf(c1) / c1;
        let mut acc = KahanSum::new();
        for (i, &g) in slopes.iter().enumerate() {
            let lo = F::from_usize_lossy(i) / m;
            let hi = F::from_usize_lossy(i + 1) / m;
            acc.add(g * (antider(hi) - antider(lo)));
        }
        acc.value() / (F::one() + self.rho1)
    }

    /// `∫_0^1 f'(t)² dt` by the midpoint rule.
    pub fn energy(&self, nodes: usize) -> F {
        let h = F::one() / F::from_usize_lossy(nodes.max(1));
        let mut acc = KahanSum::new();
        for i in 0..nodes.max(1) {
            let t = (F::from_usize_lossy(i) + F::lit(0.5)) * h;
            let d = self.derivative(t);
            acc.add(d * d);
        }
        acc.value() * h
    }

    /// Closed-form `∫_0^1 f'²`, equal to one up to rounding.
    pub fn energy_exact(&self) -> F {
        let one = F::one();
        let two = F::lit(2.0);
        let c = self.c;
        (one - two / (c + one) + one / (two * c + one)) / (self.norm * self.norm)
    }

    /// [`lil_constant`] at the same indices.
    pub fn target(&self) -> Result<F> {
        lil_constant(self.rho1, self.rho2)
    }
}

/// Largest functional value over `count` random elements of the Strassen
/// ball with piecewise-constant derivative, drawn from stream `(seed, i)`.
pub fn random_ball_search(ext: &StrassenExtremal<f64>, count: usize, seed: u64) -> f64 {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut best = f64::NEG_INFINITY;
    for i in 0..count as u64 {
        let mut rng = path_rng(seed, i);
        let m = rng.random_range(1..=64usize);
        let mut g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        // ∫ g'² = Σ g_i² / m
        let energy = g.iter().map(|x| x * x).sum::<f64>() / m as f64;
        let radius: f64 = rng.random::<f64>().sqrt();
        let scale = radius / energy.sqrt();
        g.iter_mut().for_each(|x| *x *= scale);
        best = best.max(ext.functional_piecewise(&g));
    }
    best
}

/// Statistic normalized by a law-of-the-iterated-logarithm scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LilKind {
    WalkHat,
    WalkCheck,
    ComHatSub,
    ComHatCrit,
    ComCheck,
}

impl LilKind {
    pub fn is_center_of_mass(self) -> bool {
        matches!(
            self,
            LilKind::ComHatSub | LilKind::ComHatCrit | LilKind::ComCheck
        )
    }

    pub fn mode(self) -> Mode {
        match self {
            LilKind::WalkCheck | LilKind::ComCheck => Mode::Negative,
            _ => Mode::Positive,
        }
    }
}

impl std::str::FromStr for LilKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "walk_hat" => LilKind::WalkHat,
            "walk_check" => LilKind::WalkCheck,
            "com_hat_sub" => LilKind::ComHatSub,
            "com_hat_crit" => LilKind::ComHatCrit,
            "com_check" => LilKind::ComCheck,
            _ => return Err(Error::param("kind", format!("unknown LIL kind `{s}`"))),
        })
    }
}

impl std::fmt::Display for LilKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LilKind::WalkHat => "walk_hat",
            LilKind::WalkCheck => "walk_check",
            LilKind::ComHatSub => "com_hat_sub",
            LilKind::ComHatCrit => "com_hat_crit",
            LilKind::ComCheck => "com_check",
        };
        f.write_str(s)
    }
}

/// Running `|value - drift(n)|/denom(n)` and its maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct LilTracker<F> {
    pub kind: LilKind,
    pub constant: F,
    critical: bool,
    /// Per-step mean: `m₁` or `μ̌`.
    step_mean: F,
    burn_in: usize,
    running_max: Option<F>,
    last_stat: Option<F>,
}

impl<F: Real> LilTracker<F> {
    /// Smallest `n` with a reported statistic.
    pub const FIRST_N: usize = 3;

    pub fn new(kind: LilKind, p: F, moments: &DerivedMoments) -> Result<Self> {
        let pf = p.as_f64();
        let (schedule, sigma2, mean) = match kind.mode() {
            Mode::Positive => (
                ScheduleKind::for_walk(Mode::Positive, pf)?,
                moments.sigma2,
                moments.m1,
            ),
            Mode::Negative => (ScheduleKind::Check, moments.sigma_check2, moments.mu_check),
        };
        let wanted = match kind {
            LilKind::ComHatSub => Some(ScheduleKind::HatSubcritical),
            LilKind::ComHatCrit => Some(ScheduleKind::HatCritical),
            _ => None,
        };
        if let Some(w) = wanted {
            if w != schedule {
                return Err(Error::param(
                    "p",
                    format!("p = {p} is not in the {kind} regime"),
                ));
            }
        }
        if !(sigma2 > 0.0) {
            return Err(Error::param("dist", "degenerate step law"));
        }
        let sigma = F::lit(sigma2.sqrt());
        let constant = if kind.is_center_of_mass() {
            com_lil_constant(schedule, p, sigma)?
        } else {
            walk_lil_constant(schedule, p, sigma)?
        };
        Ok(Self {
            kind,
            constant,
            critical: schedule == ScheduleKind::HatCritical,
            step_mean: F::lit(mean),
            burn_in: Self::FIRST_N,
            running_max: None,
            last_stat: None,
        })
    }

    /// Only statistics at `n >= burn_in` enter the running maximum.
    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in.max(Self::FIRST_N);
        self
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// `n·m` for walks, `m(n+1)/2` for centers of mass.
    pub fn drift(&self, n: usize) -> F {
        let nf = F::from_usize_lossy(n);
        if self.kind.is_center_of_mass() {
            self.step_mean * (nf + F::one()) * F::lit(0.5)
        } else {
            self.step_mean * nf
        }
    }

    /// `√(2n LL n)`, or `√(2n log n LL(log n))` in the critical regime.
    pub fn denom(&self, n: usize) -> F {
        let nf = F::from_usize_lossy(n);
        let two = F::lit(2.0);
        if self.critical {
            let l = nf.ln();
            (two * nf * l * loglog_guard(l)).sqrt()
        } else {
            (two * nf * loglog_guard(nf)).sqrt()
        }
    }

    /// Feeds `S_n` (walk kinds) or `G_n` (center-of-mass kinds).
    pub fn update(&mut self, n: usize, value: F) -> Option<F> {
        if n < Self::FIRST_N {
            self.last_stat = None;
            return None;
        }
        let stat = (value - self.drift(n)).abs() / self.denom(n);
        self.last_stat = Some(stat);
        if n >= self.burn_in {
            self.running_max = Some(self.running_max.map_or(stat, |m| m.max(stat)));
        }
        Some(stat)
    }

    pub fn last_stat(&self) -> Option<F> {
        self.last_stat
    }

    pub fn running_max(&self) -> Option<F> {
        self.running_max
    }

    /// `running_max / constant`.
    pub fn ratio(&self) -> Option<F> {
        self.running_max.map(|m| m / self.constant)
    }
}

/// `lil_update(tracker, n, value)`.
pub fn lil_update<F: Real>(tracker: &mut LilTracker<F>, n: usize, value: F) -> Option<F> {
    tracker.update(n, value)
}

/// One row of a LIL trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilRow {
    pub n: usize,
    pub stat: f64,
    pub running_max: f64,
    pub constant: f64,
}

/// Runs a reinforced walk for `n` steps, feeding a tracker of `kind`, and
/// records rows at the checkpoints. Returns the final tracker and the rows.
#[allow(clippy::too_many_arguments)]
pub fn lil_path(
    config: &WalkConfig,
    moments: &DerivedMoments,
    kind: LilKind,
    n: usize,
    checkpoints: &[usize],
    seed: u64,
    replicate: u64,
    burn_in: usize,
) -> Result<(LilTracker<f64>, Vec<LilRow>)> {
    if kind.mode() != config.mode {
        return Err(Error::param(
            "mode",
            format!("{kind} needs {:?} reinforcement", kind.mode()),
        ));
    }
    if kind.is_center_of_mass() && !config.track_com {
        return Err(Error::NotTracked("center of mass"));
    }
    let mut tracker = LilTracker::new(kind, config.p, moments)?.with_burn_in(burn_in);
    let mut walk = Walk::new(config.clone(), seed, replicate)?;
    walk.reserve(n);
    let mut rows = Vec::new();
    let mut next = checkpoints.iter().copied().peekable();
    let com = kind.is_center_of_mass();
    walk.run(n, |k, s, com_sum| {
        let v = if com { com_sum / k as f64 } else { s };
        let stat = tracker.update(k, v);
        while let Some(&c) = next.peek() {
            if c > k {
                break;
            }
            next.next();
            if let (true, Some(st), Some(m)) = (c == k, stat, tracker.running_max()) {
                rows.push(LilRow {
                    n: k,
                    stat: st,
                    running_max: m,
                    constant: tracker.constant,
                });
            }
        }
    });
    Ok((tracker, rows))
}

/// Trace of `η(t, 1) = W(t)/√(2t LL t)` over integer `t <= n`, with rows at
/// the checkpoints; `W` is sampled on the integers without storing the path.
/// The running max starts at `max(burn_in, 3)`.
pub fn bm_lil_path(
    n: usize,
    checkpoints: &[usize],
    seed: u64,
    replicate: u64,
    burn_in: usize,
) -> Vec<LilRow> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = path_rng(seed, replicate);
    let start = burn_in.max(LilTracker::<f64>::FIRST_N);
    let mut w = 0.0f64;
    let mut best = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    let mut next = checkpoints.iter().copied().peekable();
    for t in 1..=n {
        let z: f64 = StandardNormal.sample(&mut rng);
        w += z;
        if t < start {
            continue;
        }
        let tf = t as f64;
        let stat = w / (2.0 * tf * loglog_guard(tf)).sqrt();
        best = best.max(stat);
        while let Some(&c) = next.peek() {
            if c > t {
                break;
            }
            next.next();
            if c == t {
                rows.push(LilRow {
                    n: t,
                    stat,
                    running_max: best,
                    constant: 1.0,
                });
            }
        }
    }
    rows
}

/// Running max of `η(t, 1)` over integer `t ∈ [max(burn_in, 3), n]`.
pub fn bm_lil_running_max(n: usize, seed: u64, replicate: u64, burn_in: usize) -> f64 {
    bm_lil_path(n, &[n], seed, replicate, burn_in)
        .last()
        .map_or(f64::NEG_INFINITY, |r| r.running_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bm::{simulate_bm, simulate_bm_replicate};
    use crate::coeffs::variance_limit;
    use crate::steps::{derived_moments, StepDistribution};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    #[test]
    fn bridge_sup_degenerate_and_errors() {
        let path = simulate_bm(&grid(100), 1).unwrap();
        let s = bridge_sup_check(&path, &[5.0, 5.0, 6.0], 4).unwrap();
        assert_eq!(s[0], 0.0);
        assert!(s[1] > 0.0);
        assert!(bridge_sup_check(&path, &[5.0, 200.0], 4).is_err());
        assert!(bridge_sup_check(&path, &[5.0, 6.0], 1).is_err());
    }

    #[test]
    fn bridge_sup_fails_to_decay_for_exponential_schedule() {
        let sched: Vec<f64> = (1..=14).map(|k| (k as f64).exp()).collect();
        let path = simulate_bm(&sched, 4).unwrap();
        let s = bridge_sup_check(&path, &sched, 16).unwrap();
        let tail = &s[s.len() - 6..];
        assert!(tail.iter().any(|&x| x > 0.2), "{tail:?}");
    }

    #[test]
    fn eta_basics() {
        let path = simulate_bm(&grid(100), 2).unwrap();
        assert_eq!(eta(&path, 50.0, 0.0).unwrap(), 0.0);
        let c = 2.5;
        let scaled = path.scaled(c);
        assert_relative_eq!(
            eta(&scaled, 40.0, 0.7).unwrap(),
            c * eta(&path, 40.0, 0.7).unwrap(),
            max_relative = 1e-14
        );
        assert!(eta(&path, 60.0, 2.0).is_err());
    }

    #[test]
    fn integral_functional_cases() {
        let zero = BmPath::from_samples(vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            integral_functional(&zero, 0.0, 1.0, 2.0, 4096).unwrap(),
            0.0
        );
        let path = simulate_bm(&grid(1000), 3).unwrap();
        assert!(integral_functional(&path, -1.0, 1.0, 10.0, 4096).is_err());
        assert!(integral_functional(&path, 0.0, 1.0, 10.0, 100).is_err());
        assert!(integral_functional(&path, 0.0, 1.0, 2000.0, 4096).is_err());
        // ρ2 = 0 collapses to W(b)·∫t^ρ1 dt
        let b = 1000.0;
        let i = integral_functional(&path, 0.5, 0.0, b, 4096).unwrap();
        assert_relative_eq!(
            i,
            2.0 / 3.0 * eta(&path, b, 1.0).unwrap(),
            max_relative = 1e-12
        );
        // a linear path gives a closed form: W(t) = t ⇒ ∫ t^ρ1 b t^ρ2 dt = b/(1+ρ1+ρ2)
        let lin = BmPath::from_samples(vec![0.0, 100.0], vec![0.0, 100.0]).unwrap();
        let raw = integral_unnormalized(&lin, -0.5, 1.5, 100.0, 4096).unwrap();
        assert_relative_eq!(raw, 100.0 / 2.0 / 10.0, max_relative = 1e-6);
    }

    #[test]
    fn integral_functional_is_linear() {
        let g = grid(5000);
        let w1 = simulate_bm_replicate(&g, 8, 0).unwrap();
        let w2 = simulate_bm_replicate(&g, 8, 1).unwrap();
        let (a, b) = (1.7, -0.4);
        let mix = w1.combine(a, &w2, b).unwrap();
        for (r1, r2) in [(0.0, 1.0), (-0.5, 0.3), (0.25, 0.5)] {
            let lhs = integral_functional(&mix, r1, r2, 4000.0, 4096).unwrap();
            let rhs = a * integral_functional(&w1, r1, r2, 4000.0, 4096).unwrap()
                + b * integral_functional(&w2, r1, r2, 4000.0, 4096).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn strassen_identities() {
        let e = strassen_extremal(0.0f64, 1.0).unwrap();
        assert_relative_eq!(e.extremal_value(), 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        let e = strassen_extremal(0.25f64, 0.5).unwrap();
        assert!((e.energy_exact() - 1.0).abs() < 1e-10);
        assert!((e.energy(200_000) - 1.0).abs() < 1e-8);
        assert_eq!(e.value(0.0), 0.0);
        assert!(strassen_extremal(0.5f64, 0.0).is_err());
        assert!(strassen_extremal(-1.0f64, 0.5).is_err());
        for (r1, r2) in [
            (0.0f64, 1.0f64),
            (0.25, 0.5),
            (0.5, 0.75),
            (-0.3, 1.6),
            (0.5, 0.01),
        ] {
            let e = strassen_extremal(r1, r2).unwrap();
            let target = lil_constant(r1, r2).unwrap();
            assert!((e.extremal_value() - target).abs() < 1e-12);
            assert!((e.functional_at_extremal() - target).abs() < 1e-12);
            let squared = e.extremal_value().powi(2);
            assert!((squared - variance_limit(r1, r2).unwrap()).abs() < 1e-12);
        }
        let e = strassen_extremal(0.25f64, 0.5).unwrap();
        let numeric = e.apply_functional(|x| e.value(x), 100_000);
        assert!((numeric - e.target().unwrap()).abs() < 1e-8, "{numeric}");
    }

    #[test]
    fn random_ball_never_beats_extremal() {
        for (r1, r2) in [(0.0, 1.0), (0.25, 0.5), (0.5, 0.75)] {
            let e = strassen_extremal(r1, r2).unwrap();
            let best = random_ball_search(&e, 1000, 17);
            assert!(best <= e.extremal_value() + 1e-9);
            assert!(best > 0.5 * e.extremal_value());
        }
    }

    #[test]
    fn lil_tracker_basics() {
        let m = derived_moments(&StepDistribution::Rademacher, 0.25).unwrap();
        let mut t = LilTracker::<f64>::new(LilKind::WalkHat, 0.25, &m).unwrap();
        assert_relative_eq!(t.constant, 2f64.sqrt(), max_relative = 1e-14);
        assert_eq!(t.update(2, 5.0), None);
        assert_eq!(t.running_max(), None);
        assert_eq!(t.update(10, 0.0), Some(0.0));
        let a = t.update(11, 3.0).unwrap();
        t.update(12, 0.0);
        assert_eq!(t.running_max(), Some(a));
        assert_eq!(t.last_stat(), Some(0.0));
        assert!(LilTracker::<f64>::new(LilKind::ComHatCrit, 0.25, &m).is_err());
        let m0 = derived_moments(&StepDistribution::Rademacher, 0.0).unwrap();
        let c = LilTracker::<f64>::new(LilKind::ComHatSub, 0.0, &m0).unwrap();
        assert_relative_eq!(c.constant, 1.0 / 3f64.sqrt(), max_relative = 1e-14);
        let g = StepDistribution::gaussian(1.0, 2.0).unwrap();
        let mg = derived_moments(&g, 0.0).unwrap();
        let mut d = LilTracker::<f64>::new(LilKind::ComHatSub, 0.0, &mg).unwrap();
        assert_eq!(d.update(9, 5.0), Some(0.0));
        let half = derived_moments(&StepDistribution::Rademacher, 0.5).unwrap();
        let crit = LilTracker::<f64>::new(LilKind::ComHatCrit, 0.5, &half).unwrap();
        assert_relative_eq!(crit.constant, 2.0 / 3.0, max_relative = 1e-14);
        assert!("walk_sideways".parse::<LilKind>().is_err());
    }

    #[test]
    fn lil_path_reproducible() {
        let cfg = WalkConfig::rademacher(Mode::Positive, 0.25).unwrap();
        let m = derived_moments(&cfg.dist, 0.25).unwrap();
        let cps = [10, 100, 1000];
        let a = lil_path(&cfg, &m, LilKind::WalkHat, 1000, &cps, 5, 2, 3).unwrap();
        let b = lil_path(&cfg, &m, LilKind::WalkHat, 1000, &cps, 5, 2, 3).unwrap();
        assert_eq!(
            a.0.running_max().unwrap().to_bits(),
            b.0.running_max().unwrap().to_bits()
        );
        assert_eq!(a.1, b.1);
        assert_eq!(a.1.len(), 3);
        assert!(lil_path(&cfg, &m, LilKind::WalkCheck, 10, &cps, 5, 2, 3).is_err());
    }
}

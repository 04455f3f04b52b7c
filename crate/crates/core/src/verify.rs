//! Acceptance suites: exact identities and Monte Carlo checks of the limit
//! constants, each reported as a list of interval checks.

use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::asclt::{asclt_path, gaussian_expectation, TestFunction};
use crate::bm::simulate_bm_replicate;
use crate::coeffs::{build_coeff_table, lil_constant, variance_limit, Mode};
use crate::error::{Error, Result};
use crate::exact::{
    exact_distribution, martingale_transform, mean_recursion, step_moments, var_recursion,
};
use crate::parallel::{derive_substream, Parallelism, DEFAULT_SEED};
use crate::reinforce::{Walk, WalkConfig};
use crate::scalar::pairwise_sum;
use crate::steps::{derived_moments, StepDistribution, TruncationRule};
use crate::strongapprox::{
    integral_unnormalized, lil_path, random_ball_search, strassen_extremal, LilKind,
    DEFAULT_QUADRATURE_NODES,
};

/// First `n` entering the LIL running maxima of the sanity bands.
pub const LIL_BURN_IN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Oracle,
    OracleMc,
    Variance,
    ComVariance,
    Critical,
    Asclt,
    BmVariance,
    Strassen,
    Lil,
    Martingale,
    Reproducibility,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Oracle,
        Suite::OracleMc,
        Suite::Variance,
        Suite::ComVariance,
        Suite::Critical,
        Suite::Asclt,
        Suite::BmVariance,
        Suite::Strassen,
        Suite::Lil,
        Suite::Martingale,
        Suite::Reproducibility,
    ];

    pub fn id(self) -> u8 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::OracleMc => "oracle-mc",
            Suite::Variance => "variance",
            Suite::ComVariance => "com-variance",
            Suite::Critical => "critical",
            Suite::Asclt => "asclt",
            Suite::BmVariance => "bm-variance",
            Suite::Strassen => "strassen",
            Suite::Lil => "lil",
            Suite::Martingale => "martingale",
            Suite::Reproducibility => "reproducibility",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Suite::Oracle => "enumeration moments equal the mean/variance recursions",
            Suite::OracleMc => "simulated pmf of S_6 matches enumeration",
            Suite::Variance => "variance growth sigma^2 n/(1-2p)",
            Suite::ComVariance => "center-of-mass variance constants",
            Suite::Critical => "critical center-of-mass variance 4/9 n log n",
            Suite::Asclt => "log-average CLT targets",
            Suite::BmVariance => "Brownian integral functional variance",
            Suite::Strassen => "Strassen extremal attains the LIL constant",
            Suite::Lil => "LIL sanity bands (non-sharp)",
            Suite::Martingale => "martingale telescoping and conditional variance",
            Suite::Reproducibility => "byte-identical reruns across thread counts",
        }
    }

    /// Wall-time budget in seconds, where one is stated.
    pub fn budget_secs(self) -> Option<u64> {
        match self {
            Suite::Oracle => Some(30),
            Suite::OracleMc => Some(60),
            Suite::Variance => Some(300),
            Suite::ComVariance => Some(600),
            Suite::Asclt => Some(900),
            Suite::BmVariance => Some(300),
            _ => None,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::param("suite", format!("unknown suite `{s}`")))
    }
}

/// `lo <= measured <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn band(label: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            lo,
            hi,
            target: None,
            pass: measured >= lo && measured <= hi,
        }
    }

    /// `|measured - target| <= tol`.
    pub fn near(label: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        let mut c = Self::band(label, measured, target - tol, target + tol);
        c.target = Some(target);
        c
    }

    /// `|measured/target - 1| <= rel`.
    pub fn relative(label: impl Into<String>, measured: f64, target: f64, rel: f64) -> Self {
        let tol = rel * target.abs();
        Self::near(label, measured, target, tol)
    }

    pub fn at_most(label: impl Into<String>, measured: f64, hi: f64) -> Self {
        Self::band(label, measured, 0.0, hi)
    }

    pub fn at_least(label: impl Into<String>, measured: f64, lo: f64) -> Self {
        Self::band(label, measured, lo, 1.0)
    }

    /// Distance outside the band relative to its half-width (`<= 1` passes).
    fn severity(&self) -> f64 {
        let half = ((self.hi - self.lo) / 2.0).max(f64::MIN_POSITIVE);
        let mid = (self.hi + self.lo) / 2.0;
        (self.measured - mid).abs() / half
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub suite: Suite,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        Self {
            id: suite.id(),
            suite,
            title: suite.title().to_string(),
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks,
        }
    }

    /// The check farthest outside (or closest to the edge of) its band.
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().max_by(|a, b| {
            let ka = (!a.pass, a.severity());
            let kb = (!b.pass, b.severity());
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// `criterion 3 [variance] PASS ...` with the worst check.
    pub fn summary_line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let passed = self.checks.iter().filter(|c| c.pass).count();
        match self.worst() {
            Some(w) => format!(
                "criterion {:>2} [{}] {verdict} ({passed}/{} checks) worst: {} measured={:.6e} tolerance=[{:.6e}, {:.6e}]",
                self.id,
                self.suite.name(),
                self.checks.len(),
                w.label,
                w.measured,
                w.lo,
                w.hi
            ),
            None => format!("criterion {:>2} [{}] {verdict} (no checks)", self.id, self.suite.name()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Seed and thread budget shared by all suites.
#[derive(Debug, Clone, Copy)]
pub struct VerifyContext {
    pub seed: u64,
    pub parallelism: Parallelism,
}

impl Default for VerifyContext {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            parallelism: Parallelism::from_env(),
        }
    }
}

impl VerifyContext {
    pub fn new(seed: u64, parallelism: Parallelism) -> Self {
        Self { seed, parallelism }
    }

    /// Master seed of one suite's experiment `k`.
    fn seed_for(&self, suite: Suite, k: u64) -> u64 {
        derive_substream(self.seed ^ ((suite.id() as u64) << 56), u64::MAX - k)
    }

    fn map<T: Send>(&self, count: usize, job: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
        self.parallelism.map_replicates(count, job)
    }
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance and the standard error of that estimate.
fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let m = mean(xs);
    let d2: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let d4: Vec<f64> = d2.iter().map(|x| x * x).collect();
    let var = pairwise_sum(&d2) / (r - 1.0);
    let m4 = pairwise_sum(&d4) / r;
    let se = ((m4 - var * var).max(0.0) / r).sqrt();
    (var, se)
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        total += 1;
        hit += f as usize;
    }
    hit as f64 / total.max(1) as f64
}

fn ratio(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Positive => "positive",
        Mode::Negative => "negative",
    }
}

/// Final `(S_n, Σ_{k<=n} S_k)` of `paths` independent walks.
fn endpoints(
    ctx: &VerifyContext,
    config: &WalkConfig,
    n: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    Ok(ctx.map(paths, |i| {
        let mut w = Walk::new(config.clone(), seed, i).expect("validated config");
        w.run_silent(n);
        (w.position(), w.com_sum())
    }))
}

pub fn oracle(_ctx: &VerifyContext) -> Result<CriterionReport> {
    let rule = TruncationRule::disabled();
    let dist = StepDistribution::Rademacher;
    let mut checks = Vec::new();
    for mode in [Mode::Positive, Mode::Negative] {
        for p in [0.0, 0.25, 0.5, 0.75] {
            let means = mean_recursion::<f64>(8, p, mode, &dist, &rule)?;
            let vars = var_recursion::<f64>(8, p, mode, &dist, &rule)?;
            let mut worst: f64 = 0.0;
            for n in 1..=8 {
                let law = exact_distribution::<BigRational>(n, ratio(p), mode, &dist, &rule)?;
                let m = law.mean().to_f64().unwrap_or(f64::NAN);
                let v = law.variance().to_f64().unwrap_or(f64::NAN);
                worst = worst
                    .max((m - means[n - 1]).abs())
                    .max((v - vars[n - 1]).abs());
                if worst.is_nan() {
                    worst = f64::INFINITY;
                }
            }
            checks.push(Check::at_most(
                format!("{} p={p} n<=8 max moment gap", mode_name(mode)),
                worst,
                1e-10,
            ));
        }
    }
    Ok(CriterionReport::new(Suite::Oracle, checks))
}

pub fn oracle_mc(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, p, paths) = (6usize, 0.3, 1_000_000usize);
    let dist = StepDistribution::Rademacher;
    let law = exact_distribution::<BigRational>(
        n,
        ratio(p),
        Mode::Positive,
        &dist,
        &TruncationRule::disabled(),
    )?;
    let config = WalkConfig::rademacher(Mode::Positive, p)?;
    let seed = ctx.seed_for(Suite::OracleMc, 0);
    let ends = ctx.map(paths, |i| {
        let mut w = Walk::new(config.clone(), seed, i).expect("valid");
        w.run_silent(n);
        w.position() as i64
    });
    let mut hist = vec![0u64; 2 * n + 1];
    for s in ends {
        hist[(s + n as i64) as usize] += 1;
    }
    let mut checks = Vec::new();
    let atoms = law.to_f64_atoms();
    let mut covered = 0u64;
    for (x, prob) in &atoms {
        let idx = (x.round() as i64 + n as i64) as usize;
        covered += hist[idx];
        let freq = hist[idx] as f64 / paths as f64;
        let se = (prob * (1.0 - prob) / paths as f64).sqrt();
        checks.push(Check::near(format!("P(S_6 = {x})"), freq, *prob, 4.0 * se));
    }
    checks.push(Check::at_most(
        "simulated mass outside the enumerated support",
        (paths as u64 - covered) as f64,
        0.0,
    ));
    Ok(CriterionReport::new(Suite::OracleMc, checks))
}

pub fn variance(ctx: &VerifyContext) -> Result<CriterionReport> {
    let rule = TruncationRule::disabled();
    let dist = StepDistribution::Rademacher;
    let mut checks = Vec::new();
    for (k, p) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let vars = var_recursion::<f64>(100_000, p, Mode::Positive, &dist, &rule)?;
        let scaled = vars[100_000 - 1] * (1.0 - 2.0 * p) / 1e5;
        checks.push(Check::near(
            format!("p={p} Var(S_1e5)(1-2p)/n"),
            scaled,
            1.0,
            0.02,
        ));
        let n_mc = 10_000;
        let config = WalkConfig::rademacher(Mode::Positive, p)?;
        let ends = endpoints(
            ctx,
            &config,
            n_mc,
            100_000,
            ctx.seed_for(Suite::Variance, k as u64),
        )?;
        let xs: Vec<f64> = ends.iter().map(|e| e.0).collect();
        let (v, se) = variance_with_se(&xs);
        checks.push(Check::near(
            format!("p={p} simulated Var(S_1e4) vs recursion (3 SE)"),
            v,
            vars[n_mc - 1],
            3.0 * se,
        ));
    }
    Ok(CriterionReport::new(Suite::Variance, checks))
}

pub fn com_variance(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, paths) = (100_000usize, 20_000usize);
    let dist = StepDistribution::Rademacher;
    let mut checks = Vec::new();
    let cases = [
        (Mode::Positive, 0.0),
        (Mode::Positive, 0.25),
        (Mode::Negative, 0.25),
        (Mode::Negative, 0.5),
    ];
    for (k, (mode, p)) in cases.into_iter().enumerate() {
        let m = derived_moments(&dist, p)?;
        let (target, drift) = match mode {
            Mode::Positive => (2.0 * m.sigma2 / (3.0 * (2.0 - p) * (1.0 - 2.0 * p)), m.m1),
            Mode::Negative => (
                2.0 * m.sigma_check2 / (3.0 * (2.0 + p) * (1.0 + 2.0 * p)),
                m.mu_check,
            ),
        };
        let config = WalkConfig::new(mode, p, dist.clone())?;
        let ends = endpoints(
            ctx,
            &config,
            n,
            paths,
            ctx.seed_for(Suite::ComVariance, k as u64),
        )?;
        let nf = n as f64;
        let gs: Vec<f64> = ends
            .iter()
            .map(|e| e.1 / nf - drift * (nf + 1.0) / 2.0)
            .collect();
        let (v, _) = variance_with_se(&gs);
        checks.push(Check::relative(
            format!("{} p={p} Var(G_n)/n", mode_name(mode)),
            v / nf,
            target,
            0.05,
        ));
    }
    Ok(CriterionReport::new(Suite::ComVariance, checks))
}

pub fn critical(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, paths) = (100_000usize, 20_000usize);
    let config = WalkConfig::rademacher(Mode::Positive, 0.5)?;
    let ends = endpoints(ctx, &config, n, paths, ctx.seed_for(Suite::Critical, 0))?;
    let nf = n as f64;
    let gs: Vec<f64> = ends.iter().map(|e| e.1 / nf).collect();
    let (v, _) = variance_with_se(&gs);
    let checks = vec![Check::relative(
        "p=0.5 Var(G_n)/(n log n)",
        v / (nf * nf.ln()),
        4.0 / 9.0,
        0.12,
    )];
    Ok(CriterionReport::new(Suite::Critical, checks))
}

pub fn asclt(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, paths) = (100_000usize, 200usize);
    let dist = StepDistribution::Rademacher;
    let cos_target = gaussian_expectation(&TestFunction::<f64>::Cosine)?;
    let eq = TestFunction::ExpQuadratic(0.25);
    let eq_target = gaussian_expectation(&eq)?;
    let mut checks = Vec::new();

    let hat = WalkConfig::new(Mode::Positive, 0.25, dist.clone())?;
    let hat_m = derived_moments(&dist, 0.25)?;
    let seed = ctx.seed_for(Suite::Asclt, 0);
    let fns = vec![TestFunction::Cosine, eq.clone()];
    let hat_runs: Vec<Vec<f64>> = ctx.map(paths, |i| {
        let out = asclt_path(&hat, &hat_m, fns.clone(), n, &[n], seed, i).expect("valid");
        out.last().expect("final checkpoint").1.clone()
    });

    let check = WalkConfig::new(Mode::Negative, 0.5, dist.clone())?;
    let check_m = derived_moments(&dist, 0.5)?;
    let seed = ctx.seed_for(Suite::Asclt, 1);
    let check_runs: Vec<f64> = ctx.map(paths, |i| {
        let out = asclt_path(
            &check,
            &check_m,
            vec![TestFunction::Cosine],
            n,
            &[n],
            seed,
            i,
        )
        .expect("valid");
        out.last().expect("final checkpoint").1[0]
    });

    let hat_cos: Vec<f64> = hat_runs.iter().map(|v| v[0]).collect();
    let hat_eq: Vec<f64> = hat_runs.iter().map(|v| v[1]).collect();
    checks.push(Check::near(
        "positive p=0.25 cosine mean T_n",
        mean(&hat_cos),
        cos_target,
        0.05,
    ));
    checks.push(Check::near(
        "negative p=0.5 cosine mean T_n",
        mean(&check_runs),
        cos_target,
        0.05,
    ));
    checks.push(Check::near(
        "positive p=0.25 exp_quadratic(1/4) mean T_n",
        mean(&hat_eq),
        eq_target,
        0.2,
    ));
    checks.push(Check::at_least(
        "positive p=0.25 cosine paths with |T_n - target| <= 0.25",
        fraction(hat_cos.iter().map(|t| (t - cos_target).abs() <= 0.25)),
        0.9,
    ));
    checks.push(Check::at_least(
        "positive p=0.25 exp_quadratic(1/4) paths with |T_n - target| <= 0.25",
        fraction(hat_eq.iter().map(|t| (t - eq_target).abs() <= 0.25)),
        0.9,
    ));
    checks.push(Check::at_least(
        "negative p=0.5 cosine paths with |T_n - target| <= 0.25",
        fraction(check_runs.iter().map(|t| (t - cos_target).abs() <= 0.25)),
        0.9,
    ));
    Ok(CriterionReport::new(Suite::Asclt, checks))
}

pub fn bm_variance(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (grid_n, paths) = (100_000usize, 10_000usize);
    let grid: Vec<f64> = (1..=grid_n).map(|i| i as f64).collect();
    let b = grid_n as f64;
    let pairs = [(0.0, 1.0), (0.25, 0.5), (0.5, 0.75)];
    let seed = ctx.seed_for(Suite::BmVariance, 0);
    let vals: Vec<[f64; 3]> = ctx.map(paths, |i| {
        let path = simulate_bm_replicate(&grid, seed, i).expect("valid grid");
        let mut out = [0.0; 3];
        for (o, &(r1, r2)) in out.iter_mut().zip(&pairs) {
            *o = integral_unnormalized(&path, r1, r2, b, DEFAULT_QUADRATURE_NODES)
                .expect("in range");
        }
        out
    });
    let mut checks = Vec::new();
    for (j, &(r1, r2)) in pairs.iter().enumerate() {
        let xs: Vec<f64> = vals.iter().map(|v| v[j]).collect();
        let (v, _) = variance_with_se(&xs);
        checks.push(Check::relative(
            format!("(rho1, rho2)=({r1}, {r2}) Var of the integral"),
            v,
            variance_limit(r1, r2)?,
            0.03,
        ));
    }
    Ok(CriterionReport::new(Suite::BmVariance, checks))
}

pub fn strassen(ctx: &VerifyContext) -> Result<CriterionReport> {
    let pairs = [
        (0.0, 1.0),
        (0.25, 0.5),
        (0.5, 0.75),
        (-0.25, 1.5),
        (-0.5, 2.0),
    ];
    let mut checks = Vec::new();
    for (k, &(r1, r2)) in pairs.iter().enumerate() {
        let e = strassen_extremal(r1, r2)?;
        let target = lil_constant(r1, r2)?;
        let tag = format!("({r1}, {r2})");
        checks.push(Check::near(
            format!("{tag} extremal value"),
            e.extremal_value(),
            target,
            1e-8,
        ));
        checks.push(Check::near(
            format!("{tag} functional of the extremal, numeric"),
            e.apply_functional(|x| e.value(x), 200_000),
            target,
            1e-8,
        ));
        checks.push(Check::near(
            format!("{tag} energy of the extremal"),
            e.energy_exact(),
            1.0,
            1e-10,
        ));
        let best = random_ball_search(&e, 1000, ctx.seed_for(Suite::Strassen, k as u64));
        checks.push(Check::band(
            format!("{tag} best of 1000 random ball elements minus extremal"),
            best - e.extremal_value(),
            -1.0,
            1e-9,
        ));
    }
    Ok(CriterionReport::new(Suite::Strassen, checks))
}

pub fn lil(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, paths) = (1_000_000usize, 200usize);
    let dist = StepDistribution::Rademacher;
    let mut checks = Vec::new();
    for (k, (kind, p)) in [(LilKind::WalkHat, 0.25), (LilKind::ComHatSub, 0.0)]
        .into_iter()
        .enumerate()
    {
        let config = WalkConfig::new(Mode::Positive, p, dist.clone())?;
        let m = derived_moments(&dist, p)?;
        let seed = ctx.seed_for(Suite::Lil, k as u64);
        let ratios: Vec<f64> = ctx.map(paths, |i| {
            let (t, _) = lil_path(&config, &m, kind, n, &[], seed, i, LIL_BURN_IN).expect("valid");
            t.ratio().unwrap_or(f64::NAN)
        });
        checks.push(Check::at_least(
            format!("{kind} p={p} paths with running_max/constant in [0.4, 1.3] (sanity)"),
            fraction(ratios.iter().map(|r| (0.4..=1.3).contains(r))),
            0.9,
        ));
    }
    Ok(CriterionReport::new(Suite::Lil, checks))
}

pub fn martingale(ctx: &VerifyContext) -> Result<CriterionReport> {
    let (n, paths, p) = (100_000usize, 100usize, 0.25);
    let dist = StepDistribution::Rademacher;
    let rule = TruncationRule::disabled();
    let config = WalkConfig::new(Mode::Positive, p, dist.clone())?;
    let table = build_coeff_table(Mode::Positive, p, n)?;
    let sm = step_moments::<f64>(&dist, &rule, n);
    let sigma2 = derived_moments(&dist, p)?.sigma2;
    let seed = ctx.seed_for(Suite::Martingale, 0);
    let runs: Vec<(f64, f64)> = ctx.map(paths, |i| {
        let mut w = Walk::new(config.clone(), seed, i).expect("valid");
        w.run_silent(n);
        let d = martingale_transform(&w.realized_values(), p, Mode::Positive, &table, &sm, sigma2)
            .expect("table covers n");
        let gap = d
            .telescoped
            .iter()
            .zip(&d.martingale)
            .fold(0.0f64, |g, (t, m)| g.max((t - m).abs()));
        (gap, d.normalized_cond_var[n - 1])
    });
    let worst_gap = runs.iter().fold(0.0f64, |g, r| g.max(r.0));
    let checks = vec![
        Check::at_most("max over paths and n of |sum Y_k - M_n|", worst_gap, 1e-9),
        Check::at_least(
            "paths with normalized conditional variance in [0.9, 1.1] at n=1e5",
            fraction(runs.iter().map(|r| (0.9..=1.1).contains(&r.1))),
            0.95,
        ),
    ];
    Ok(CriterionReport::new(Suite::Martingale, checks))
}

/// Runs one of the suites 1–10.
pub fn run_suite(suite: Suite, ctx: &VerifyContext) -> Result<CriterionReport> {
    match suite {
        Suite::Oracle => oracle(ctx),
        Suite::OracleMc => oracle_mc(ctx),
        Suite::Variance => variance(ctx),
        Suite::ComVariance => com_variance(ctx),
        Suite::Critical => critical(ctx),
        Suite::Asclt => asclt(ctx),
        Suite::BmVariance => bm_variance(ctx),
        Suite::Strassen => strassen(ctx),
        Suite::Lil => lil(ctx),
        Suite::Martingale => martingale(ctx),
        Suite::Reproducibility => reproducibility(ctx, &[]),
    }
}

/// Thread count different from `threads`, for reruns.
pub fn alternate_threads(threads: usize) -> usize {
    if threads == 1 {
        4
    } else {
        1
    }
}

/// Reruns each suite with a different thread count and compares the
/// serialized reports with `baseline` (which is computed first when empty).
pub fn reproducibility(
    ctx: &VerifyContext,
    baseline: &[CriterionReport],
) -> Result<CriterionReport> {
    let owned;
    let baseline = if baseline.is_empty() {
        owned = Suite::ALL[..10]
            .iter()
            .map(|&s| run_suite(s, ctx))
            .collect::<Result<Vec<_>>>()?;
        &owned[..]
    } else {
        baseline
    };
    let other = VerifyContext::new(
        ctx.seed,
        Parallelism::new(alternate_threads(ctx.parallelism.threads())),
    );
    let mut checks = Vec::new();
    for first in baseline {
        let again = run_suite(first.suite, &other)?;
        let same = first.to_json() == again.to_json();
        checks.push(Check::near(
            format!(
                "{} identical with {} vs {} threads",
                first.suite.name(),
                ctx.parallelism.threads(),
                other.parallelism.threads()
            ),
            same as u8 as f64,
            1.0,
            0.0,
        ));
    }
    Ok(CriterionReport::new(Suite::Reproducibility, checks))
}

/// Runs the requested suites in order; the reproducibility suite reuses the
/// reports of the other suites in the same call.
pub fn run_suites(suites: &[Suite], ctx: &VerifyContext) -> Result<Vec<CriterionReport>> {
    let mut out: Vec<CriterionReport> = Vec::new();
    for &s in suites {
        let r = if s == Suite::Reproducibility {
            let prior: Vec<CriterionReport> = out
                .iter()
                .filter(|r| r.suite != Suite::Reproducibility)
                .cloned()
                .collect();
            reproducibility(ctx, &prior)?
        } else {
            run_suite(s, ctx)?
        };
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(Suite::Reproducibility.id(), 11);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn check_bands() {
        assert!(Check::near("a", 1.01, 1.0, 0.02).pass);
        assert!(!Check::relative("b", 1.1, 1.0, 0.05).pass);
        assert!(Check::at_most("c", 0.0, 0.0).pass);
        assert!(!Check::at_least("d", 0.89, 0.9).pass);
        let r = CriterionReport::new(Suite::Strassen, vec![Check::near("x", 3.0, 1.0, 1.0)]);
        assert!(!r.pass);
        assert!(r.summary_line().contains("FAIL"));
    }

    #[test]
    fn sample_variance() {
        let (v, se) = variance_with_se(&[1.0, -1.0, 1.0, -1.0]);
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
        assert!(se >= 0.0);
    }

    #[test]
    fn cheap_suites_pass() {
        let ctx = VerifyContext::new(DEFAULT_SEED, Parallelism::new(1));
        assert!(oracle(&ctx).unwrap().pass);
        assert!(strassen(&ctx).unwrap().pass);
    }
}

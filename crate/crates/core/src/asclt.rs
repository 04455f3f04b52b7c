//! Log-weighted almost-sure CLT functionals.
//!
//! For a normalizing sequence `b_k` the functional is
//! `T_n(f) = (1/log b_n) Σ_k ((b_k - b_{k-1})/b_k) f(M_k/√b_k)`; the reinforced
//! walks use the equivalent forms with weights `1/k` (or `1/(k log k)` in the
//! critical regime) and normalizer `log n` (or `log log n`).

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use crate::bm::BmPath;
use crate::coeffs::{Mode, NormalizationSchedule, ScheduleKind};
use crate::error::{Error, Result};
use crate::reinforce::{Walk, WalkConfig};
use crate::scalar::{KahanSum, Real};
use crate::steps::DerivedMoments;

/// Test functions `f` integrated against the empirical log-average measure.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction<F> {
    Cosine,
    Arctan,
    Square,
    Constant(F),
    /// `exp(γ x²)`, admissible for `γ < 1/2`.
    ExpQuadratic(F),
    /// Trapezoid: `1` on `[a, b]`, linear to `0` over `width` on each side.
    SmoothedIndicator {
        a: F,
        b: F,
        width: F,
    },
    /// `Σ c_i f_i`.
    Linear(Vec<(F, TestFunction<F>)>),
}

impl<F: Real> TestFunction<F> {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::ExpQuadratic(g) if !(*g < F::lit(0.5)) => Err(Error::param(
                "gamma",
                format!("exp_quadratic needs γ < 1/2, got {g}"),
            )),
            TestFunction::SmoothedIndicator { a, b, width } if !(*width > F::zero() && a <= b) => {
                Err(Error::param(
                    "f",
                    "smoothed_indicator needs a <= b and width > 0",
                ))
            }
            TestFunction::Linear(terms) => terms.iter().try_for_each(|(_, f)| f.validate()),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: F) -> F {
        match self {
            TestFunction::Cosine => x.cos(),
            TestFunction::Arctan => x.atan(),
            TestFunction::Square => x * x,
            TestFunction::Constant(c) => *c,
            TestFunction::ExpQuadratic(g) => (*g * x * x).exp(),
            TestFunction::SmoothedIndicator { a, b, width } => {
                if x < *a {
                    (F::one() - (*a - x) / *width).max(F::zero())
                } else if x > *b {
                    (F::one() - (x - *b) / *width).max(F::zero())
                } else {
                    F::one()
                }
            }
            TestFunction::Linear(terms) => terms
                .iter()
                .fold(F::zero(), |acc, (c, f)| acc + *c * f.eval(x)),
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> String {
        match self {
            TestFunction::Cosine => "cosine".into(),
            TestFunction::Arctan => "arctan".into(),
            TestFunction::Square => "square".into(),
            TestFunction::Constant(c) => format!("constant:{c}"),
            TestFunction::ExpQuadratic(g) => format!("exp_quadratic:{g}"),
            TestFunction::SmoothedIndicator { a, b, width } => {
                format!("smoothed_indicator:{a},{b},{width}")
            }
            TestFunction::Linear(_) => "linear".into(),
        }
    }
}

impl<F: Real> std::str::FromStr for TestFunction<F> {
    type Err = Error;

    /// `cosine`, `arctan`, `square`, `constant:c`, `exp_quadratic:γ`,
    /// `smoothed_indicator:a,b,width`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<F> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map(F::lit)
                        .map_err(|e| Error::param("f", format!("bad argument `{a}`: {e}")))
                })
                .collect::<Result<_>>()?
        };
        let f = match (head.trim(), nums.as_slice()) {
            ("cosine" | "cos", []) => TestFunction::Cosine,
            ("arctan" | "atan", []) => TestFunction::Arctan,
            ("square", []) => TestFunction::Square,
            ("constant", [c]) => TestFunction::Constant(*c),
            ("exp_quadratic", [g]) => TestFunction::ExpQuadratic(*g),
            ("smoothed_indicator", [a, b, w]) => TestFunction::SmoothedIndicator {
                a: *a,
                b: *b,
                width: *w,
            },
            _ => return Err(Error::param("f", format!("unknown test function `{s}`"))),
        };
        f.validate()?;
        Ok(f)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `E f(Z)` for standard normal `Z`, in closed form.
pub fn gaussian_expectation<F: Real>(f: &TestFunction<F>) -> Result<F> {
    f.validate()?;
    Ok(match f {
        TestFunction::Cosine => F::lit((-0.5f64).exp()),
        TestFunction::Arctan => F::zero(),
        TestFunction::Square => F::one(),
        TestFunction::Constant(c) => *c,
        TestFunction::ExpQuadratic(g) => (F::one() - F::lit(2.0) * *g).sqrt().recip(),
        TestFunction::SmoothedIndicator { a, b, width } => {
            let (a, b, w) = (a.as_f64(), b.as_f64(), width.as_f64());
            let l = a - w;
            let r = b + w;
            let plateau = normal_cdf(b) - normal_cdf(a);
            let up = (normal_pdf(l) - normal_pdf(a)) / w - l / w * (normal_cdf(a) - normal_cdf(l));
            let down =
                r / w * (normal_cdf(r) - normal_cdf(b)) - (normal_pdf(b) - normal_pdf(r)) / w;
            F::lit(plateau + up + down)
        }
        TestFunction::Linear(terms) => {
            let mut acc = F::zero();
            for (c, g) in terms {
                acc = acc + *c * gaussian_expectation(g)?;
            }
            acc
        }
    })
}

/// Nodes and weights of the 64-point Gauss–Hermite rule (weight `e^{-x²}`).
pub fn gauss_hermite_64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(64))
}

/// Gauss–Hermite rule by Newton iteration on the orthonormal recurrence.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = PI.powf(-0.25);
    let mut nodes = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0].0,
            3 => 1.91 * z - 0.91 * nodes[1].0,
            _ => 2.0 * z - nodes[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / (pp * pp);
        nodes[i] = (z, w);
        nodes[n - 1 - i] = (-z, w);
    }
    nodes
}

/// `E f(Z)` by 64-point Gauss–Hermite quadrature.
pub fn gauss_hermite_expectation(f: impl Fn(f64) -> f64) -> f64 {
    gauss_hermite_64()
        .iter()
        .map(|&(x, w)| w * f(SQRT_2 * x))
        .sum::<f64>()
        / PI.sqrt()
}

/// Normalizing sequence `b_k`, `k >= 1`, with `b_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum BSequence<F> {
    /// `scale · k^exponent`
    Power { scale: F, exponent: F },
    /// `scale · log k`
    Log { scale: F },
    /// `values[k-1] = b_k`
    Explicit(Vec<F>),
}

impl<F: Real> BSequence<F> {
    pub fn identity() -> Self {
        BSequence::Power {
            scale: F::one(),
            exponent: F::one(),
        }
    }

    pub fn b(&self, k: usize) -> Result<F> {
        if k == 0 {
            return Ok(F::zero());
        }
        let kf = F::from_usize_lossy(k);
        match self {
            BSequence::Power { scale, exponent } => Ok(*scale * kf.powf(*exponent)),
            BSequence::Log { scale } => Ok(*scale * kf.ln()),
            BSequence::Explicit(v) => v.get(k - 1).copied().ok_or(Error::IndexOutOfRange {
                index: k,
                max: v.len(),
            }),
        }
    }

    /// `k0 = min{k : b_k >= e}`.
    pub fn first_index(&self) -> Result<usize> {
        let e = F::E();
        match self {
            BSequence::Explicit(v) => v
                .iter()
                .position(|&b| b >= e)
                .map(|i| i + 1)
                .ok_or_else(|| Error::Schedule("b_k never reaches e".into())),
            _ => {
                let mut k = 1;
                while self.b(k)? < e {
                    k += 1;
                    if k > 1 << 40 {
                        return Err(Error::Schedule("b_k never reaches e".into()));
                    }
                }
                Ok(k)
            }
        }
    }
}

impl<F: Real> From<&NormalizationSchedule<F>> for BSequence<F> {
    fn from(s: &NormalizationSchedule<F>) -> Self {
        let one = F::one();
        let two = F::lit(2.0);
        match s.kind {
            ScheduleKind::HatSubcritical => {
                let e = one - two * s.p;
                BSequence::Power {
                    scale: s.sigma2 / e,
                    exponent: e,
                }
            }
            ScheduleKind::HatCritical => BSequence::Log { scale: s.sigma2 },
            ScheduleKind::Check => {
                let e = one + two * s.p;
                BSequence::Power {
                    scale: s.sigma2 / e,
                    exponent: e,
                }
            }
        }
    }
}

/// How terms are weighted and normalized.
#[derive(Debug, Clone, PartialEq)]
pub enum Weighting<F> {
    /// Weights `(b_k - b_{k-1})/b_k`, argument `M_k/√b_k`, normalizer `log b_n`.
    Increments(BSequence<F>),
    /// Walk form: weights `1/k` or `1/(k log k)`, argument
    /// `(S_k - k·drift)/√σ_k²`, normalizer `log n` or `log log n`.
    Walk(NormalizationSchedule<F>),
}

/// Running `T_n(f)` for a list of test functions sharing one path.
#[derive(Debug, Clone)]
pub struct AscltAccumulator<F> {
    weighting: Weighting<F>,
    fns: Vec<TestFunction<F>>,
    sums: Vec<KahanSum<F>>,
    k0: usize,
    last_k: usize,
    terms: usize,
}

impl<F: Real> AscltAccumulator<F> {
    pub fn new(weighting: Weighting<F>, fns: Vec<TestFunction<F>>) -> Result<Self> {
        for f in &fns {
            f.validate()?;
        }
        let k0 = match &weighting {
            Weighting::Increments(b) => b.first_index()?,
            Weighting::Walk(s) => s.first_index().max(BSequence::from(s).first_index()?),
        };
        let sums = vec![KahanSum::new(); fns.len()];
        Ok(Self {
            weighting,
            fns,
            sums,
            k0,
            last_k: 0,
            terms: 0,
        })
    }

    pub fn first_index(&self) -> usize {
        self.k0
    }

    pub fn functions(&self) -> &[TestFunction<F>] {
        &self.fns
    }

    /// Weight of term `k` (zero below `k0`).
    pub fn weight(&self, k: usize) -> Result<F> {
        if k < self.k0 {
            return Ok(F::zero());
        }
        match &self.weighting {
            Weighting::Increments(b) => {
                let bk = b.b(k)?;
                let prev = b.b(k - 1)?;
                if !(bk > prev) {
                    return Err(Error::Schedule(format!("b_k not increasing at k = {k}")));
                }
                Ok((bk - prev) / bk)
            }
            Weighting::Walk(s) => Ok(s.weight(k)),
        }
    }

    /// Adds the term for index `k` with path value `value` (`M_k` or `S_k`).
    #[inline]
    pub fn update(&mut self, k: usize, value: F) -> Result<()> {
        if k <= self.last_k {
            return Err(Error::Schedule(format!(
                "indices must increase: {k} after {}",
                self.last_k
            )));
        }
        self.last_k = k;
        if k < self.k0 {
            return Ok(());
        }
        let w = self.weight(k)?;
        let x = match &self.weighting {
            Weighting::Increments(b) => value / b.b(k)?.sqrt(),
            Weighting::Walk(s) => s.standardize(k, value),
        };
        for (f, acc) in self.fns.iter().zip(self.sums.iter_mut()) {
            acc.add(w * f.eval(x));
        }
        self.terms += 1;
        Ok(())
    }

    pub fn normalizer(&self) -> Result<F> {
        let n = self.last_k;
        let z = match &self.weighting {
            Weighting::Increments(b) => b.b(n)?.ln(),
            Weighting::Walk(s) => s.log_normalizer(n),
        };
        if !(z > F::zero()) {
            return Err(Error::Schedule(format!(
                "log normalizer not positive at n = {n}"
            )));
        }
        Ok(z)
    }

    /// `T_n(f)` for each function, `n` being the last updated index.
    pub fn finalize(&self) -> Result<Vec<F>> {
        if self.terms == 0 {
            return Err(Error::Schedule("no terms accumulated".into()));
        }
        let z = self.normalizer()?;
        Ok(self.sums.iter().map(|s| s.value() / z).collect())
    }
}

/// Walk-form accumulator for positive reinforcement (`p <= 1/2`).
pub fn asclt_hat<F: Real>(
    p: F,
    moments: &DerivedMoments,
    fns: Vec<TestFunction<F>>,
) -> Result<AscltAccumulator<F>> {
    moments.require_nondegenerate()?;
    let kind = ScheduleKind::for_walk(Mode::Positive, p.as_f64())?;
    let s = NormalizationSchedule::new(kind, p, F::lit(moments.sigma2), F::lit(moments.m1))?;
    AscltAccumulator::new(Weighting::Walk(s), fns)
}

/// Walk-form accumulator for negative reinforcement.
pub fn asclt_check<F: Real>(
    p: F,
    moments: &DerivedMoments,
    fns: Vec<TestFunction<F>>,
) -> Result<AscltAccumulator<F>> {
    if !(moments.sigma_check2 > 0.0) {
        return Err(Error::param("dist", "degenerate step law (σ̌² = 0)"));
    }
    let s = NormalizationSchedule::new(
        ScheduleKind::Check,
        p,
        F::lit(moments.sigma_check2),
        F::lit(moments.mu_check),
    )?;
    AscltAccumulator::new(Weighting::Walk(s), fns)
}

/// `⌈factor^j⌉` for `j >= 0`, deduplicated, capped at `n` and always ending at `n`.
pub fn geometric_checkpoints(n: usize, factor: f64) -> Vec<usize> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let factor = if factor > 1.0 { factor } else { 1.5 };
    let mut x = 1.0f64;
    while (x.ceil() as usize) < n {
        let c = x.ceil() as usize;
        if out.last() != Some(&c) {
            out.push(c);
        }
        x *= factor;
    }
    out.push(n);
    out
}

/// Runs one reinforced walk for `n` steps and reports `T_k(f)` for each
/// function at each checkpoint `k` (checkpoints below the first usable
/// index are skipped).
#[allow(clippy::too_many_arguments)]
pub fn asclt_path(
    config: &WalkConfig,
    moments: &DerivedMoments,
    fns: Vec<TestFunction<f64>>,
    n: usize,
    checkpoints: &[usize],
    seed: u64,
    replicate: u64,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut acc = match config.mode {
        Mode::Positive => asclt_hat(config.p, moments, fns)?,
        Mode::Negative => asclt_check(config.p, moments, fns)?,
    };
    let mut walk = Walk::new(config.clone(), seed, replicate)?;
    walk.reserve(n);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().filter(|&c| c <= n).peekable();
    let min_k = acc.first_index() + 1;
    for k in 1..=n {
        walk.advance();
        acc.update(k, walk.position())?;
        while let Some(&c) = next.peek() {
            if c > k {
                break;
            }
            next.next();
            if c == k && k >= min_k.max(3) {
                out.push((k, acc.finalize()?));
            }
        }
    }
    Ok(out)
}

/// `T_n(f, W) = (1/log b_n) Σ_{k=2}^n (1/b_k) ∫_{b_{k-1}}^{b_k} f(W(t)/√t) dt`,
/// with the inner integrals evaluated by the midpoint rule on the path grid.
/// Every `b_k` must be a grid point.
pub fn asclt_bm<F: Real>(path: &BmPath<F>, schedule: &[F], f: &TestFunction<F>) -> Result<F> {
    f.validate()?;
    if schedule.len() < 2 {
        return Err(Error::Schedule("need at least two schedule points".into()));
    }
    let times = path.times();
    let values = path.values();
    let locate = |b: F| -> Result<usize> {
        times
            .binary_search_by(|t| t.partial_cmp(&b).expect("finite grid"))
            .map_err(|_| Error::Grid(format!("schedule point {b} is not on the simulation grid")))
    };
    let mut total = KahanSum::new();
    let mut lo = locate(schedule[0])?;
    for w in schedule.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Schedule("b_k not increasing".into()));
        }
        let hi = locate(w[1])?;
        let mut inner = KahanSum::new();
        for i in lo..hi {
            let dt = times[i + 1] - times[i];
            let tm = (times[i] + times[i + 1]) * F::lit(0.5);
            let wm = (values[i] + values[i + 1]) * F::lit(0.5);
            inner.add(dt * f.eval(wm / tm.sqrt()));
        }
        total.add(inner.value() / w[1]);
        lo = hi;
    }
    let z = schedule[schedule.len() - 1].ln();
    if !(z > F::zero()) {
        return Err(Error::Schedule("log b_n not positive".into()));
    }
    Ok(total.value() / z)
}

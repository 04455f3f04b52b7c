//! One function per subcommand; each returns rows and aggregates.

use anyhow::{bail, Context, Result};
use num_traits::FromPrimitive;
use serde_json::{json, Value};
use stepwalk::asclt::{asclt_path, gaussian_expectation, geometric_checkpoints, TestFunction};
use stepwalk::coeffs::{
    build_coeff_table, com_lil_constant, lil_constant, regular_variation_indices, variance_limit,
    walk_lil_constant, Mode, ScheduleKind,
};
use stepwalk::exact::{
    com_variance, exact_distribution, mean_recursion, var_recursion, ENUMERATION_CAP,
};
use stepwalk::parallel::{derive_substream, Parallelism};
use stepwalk::reinforce::{Walk, WalkConfig};
use stepwalk::scalar::pairwise_sum;
use stepwalk::steps::derived_moments;
use stepwalk::strongapprox::{bm_lil_path, lil_path, LilKind, LilRow};
use stepwalk::verify::{run_suites, Suite, VerifyContext};
use stepwalk::{ExactDistributionQ, Rational};

use crate::config::ExperimentConfig;
use crate::output::{Csv, Outcome};

const DEFAULT_GROWTH: f64 = 1.5;

fn seeds(c: &ExperimentConfig) -> Vec<u64> {
    (0..c.paths as u64)
        .map(|i| derive_substream(c.seed, i))
        .collect()
}

fn walk_config(c: &ExperimentConfig) -> Result<WalkConfig> {
    Ok(WalkConfig::new(c.mode, c.p, c.dist.clone())?.with_truncation(c.truncation()?))
}

/// Geometric grid, `--checkpoints` or 1.5 by default.
fn sparse_grid(c: &ExperimentConfig) -> Vec<usize> {
    geometric_checkpoints(c.n, c.checkpoints.unwrap_or(DEFAULT_GROWTH))
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample variance, `None` for a single path.
fn variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let d: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    Some(pairwise_sum(&d) / (xs.len() - 1) as f64)
}

fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

pub fn coeffs(c: &ExperimentConfig) -> Result<Outcome> {
    let table = build_coeff_table(c.mode, c.p, c.n)?;
    let mut csv = Csv::new("coeffs", &["n", "a_n", "s2_n", "ratio"]);
    for k in c.checkpoint_grid() {
        csv.row(&[&k, &table.a(k)?, &table.s2(k)?, &table.ratio(k)?]);
    }
    let mut agg = json!({
        "n": c.n,
        "a_n": table.a(c.n)?,
        "s2_n": table.s2(c.n)?,
        "ratio": table.ratio(c.n)?,
    });
    if let Ok(kind) = ScheduleKind::for_walk(c.mode, c.p) {
        let m = derived_moments(&c.dist, c.p)?;
        let sigma = match kind {
            ScheduleKind::Check => m.sigma_check2,
            _ => m.sigma2,
        }
        .sqrt();
        let (r1, r2) = regular_variation_indices(kind, c.p)?;
        agg["regime"] = json!(kind);
        agg["rho1"] = json!(r1);
        agg["rho2"] = json!(r2);
        agg["variance_limit"] = json!(variance_limit(r1, r2)?);
        agg["lil_constant"] = json!(lil_constant(r1, r2)?);
        if sigma > 0.0 {
            agg["walk_lil_constant"] = json!(walk_lil_constant(kind, c.p, sigma)?);
            agg["com_lil_constant"] = json!(com_lil_constant(kind, c.p, sigma)?);
        }
    }
    Ok(Outcome {
        csv: Some(csv),
        aggregates: agg,
        replicate_seeds: Vec::new(),
        pass: true,
    })
}

pub fn simulate(c: &ExperimentConfig) -> Result<Outcome> {
    let cfg = walk_config(c)?;
    let grid = c.checkpoint_grid();
    let n = c.n;
    let runs = Parallelism::from_env().map_replicates(c.paths, |i| {
        let mut w = Walk::new(cfg.clone(), c.seed, i).expect("validated config");
        w.reserve(n);
        let mut rows = Vec::with_capacity(grid.len());
        let mut next = grid.iter().copied().peekable();
        w.run(n, |k, s, com_sum| {
            if next.peek() == Some(&k) {
                next.next();
                rows.push((k, s, com_sum / k as f64));
            }
        });
        (rows, w.position(), w.com_sum() / n as f64)
    });
    let mut csv = Csv::new("simulate", &["n", "path_id", "S_n", "G_n"]);
    let (mut ends, mut coms) = (Vec::new(), Vec::new());
    for (id, (rows, s, g)) in runs.into_iter().enumerate() {
        for (k, s, g) in rows {
            csv.row(&[&k, &id, &s, &g]);
        }
        ends.push(s);
        coms.push(g);
    }
    let rule = c.truncation()?;
    let exact_mean = mean_recursion::<f64>(n, c.p, c.mode, &c.dist, &rule)?[n - 1];
    let exact_var = var_recursion::<f64>(n, c.p, c.mode, &c.dist, &rule)?[n - 1];
    let exact_com_var = com_variance::<f64>(n, c.p, c.mode, &c.dist, &rule)?;
    let agg = json!({
        "n": n,
        "paths": c.paths,
        "mean_S_n": mean(&ends),
        "var_S_n": variance(&ends),
        "mean_G_n": mean(&coms),
        "var_G_n": variance(&coms),
        "exact_mean_S_n": exact_mean,
        "exact_var_S_n": exact_var,
        "exact_var_G_n": exact_com_var,
    });
    Ok(Outcome {
        csv: Some(csv),
        aggregates: agg,
        replicate_seeds: seeds(c),
        pass: true,
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn oracle(c: &ExperimentConfig) -> Result<Outcome> {
    if c.n > ENUMERATION_CAP {
        bail!("invalid n: exact enumeration is capped at {ENUMERATION_CAP} steps");
    }
    let rule = c.truncation()?;
    let n = c.n;
    let law = exact_distribution::<f64>(n, c.p, c.mode, &c.dist, &rule)?;
    let means = mean_recursion::<f64>(n, c.p, c.mode, &c.dist, &rule)?;
    let vars = var_recursion::<f64>(n, c.p, c.mode, &c.dist, &rule)?;
    let mut csv = Csv::new("oracle", &["value", "prob"]);
    for (x, q) in law.iter() {
        csv.row(&[x, q]);
    }
    // the same identities in exact rational arithmetic
    let pq = Rational::from_f64(c.p).context("p is not finite")?;
    let exact: ExactDistributionQ = exact_distribution(n, pq.clone(), c.mode, &c.dist, &rule)?;
    let qmeans = mean_recursion(n, pq.clone(), c.mode, &c.dist, &rule)?;
    let qvars = var_recursion(n, pq, c.mode, &c.dist, &rule)?;
    let rational_ok = exact.mean() == qmeans[n - 1] && exact.variance() == qvars[n - 1];
    let checks = json!({
        "total_mass": close(law.total_mass(), 1.0, 1e-12),
        "mean_matches_recursion": close(law.mean(), means[n - 1], 1e-10),
        "variance_matches_recursion": close(law.variance(), vars[n - 1], 1e-10),
        "rational_identities": rational_ok,
    });
    let pass = checks
        .as_object()
        .expect("object")
        .values()
        .all(|v| v == &Value::Bool(true));
    let agg = json!({
        "n": n,
        "atoms": law.len(),
        "mean": law.mean(),
        "variance": law.variance(),
        "mean_recursion": means[n - 1],
        "var_recursion": vars[n - 1],
        "checks": checks,
    });
    Ok(Outcome {
        csv: Some(csv),
        aggregates: agg,
        replicate_seeds: Vec::new(),
        pass,
    })
}

pub fn asclt(c: &ExperimentConfig) -> Result<Outcome> {
    let names = if c.f.is_empty() {
        vec!["cosine".to_string()]
    } else {
        c.f.clone()
    };
    let fns = names
        .iter()
        .map(|s| s.parse::<TestFunction<f64>>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let targets = fns
        .iter()
        .map(gaussian_expectation)
        .collect::<stepwalk::Result<Vec<f64>>>()?;
    let cfg = walk_config(c)?;
    let m = derived_moments(&c.dist, c.p)?;
    let grid = sparse_grid(c);
    let runs = Parallelism::from_env().map_replicates(c.paths, |i| {
        asclt_path(&cfg, &m, fns.clone(), c.n, &grid, c.seed, i)
    });
    let runs = runs.into_iter().collect::<stepwalk::Result<Vec<_>>>()?;
    let mut csv = Csv::new("asclt", &["n", "path_id", "f", "T_n"]);
    let mut finals: Vec<Vec<f64>> = vec![Vec::new(); fns.len()];
    for (id, rows) in runs.iter().enumerate() {
        for (k, t) in rows {
            for (j, v) in t.iter().enumerate() {
                csv.row(&[k, &id, &fns[j].name(), v]);
            }
        }
        if let Some((k, t)) = rows.last() {
            if *k == c.n {
                for (j, v) in t.iter().enumerate() {
                    finals[j].push(*v);
                }
            }
        }
    }
    let per_f: Vec<Value> = fns
        .iter()
        .zip(&targets)
        .zip(&finals)
        .map(|((f, &target), xs)| {
            if xs.is_empty() {
                return json!({ "f": f.name(), "target": target, "mean": null });
            }
            let mu = mean(xs);
            let close = xs.iter().filter(|x| (*x - target).abs() <= 0.25).count();
            json!({
                "f": f.name(),
                "target": target,
                "mean": mu,
                "sd": variance(xs).map(f64::sqrt),
                "abs_error": (mu - target).abs(),
                "paths_within_0.25": close,
            })
        })
        .collect();
    let agg = json!({ "n": c.n, "paths": c.paths, "functions": per_f });
    Ok(Outcome {
        csv: Some(csv),
        aggregates: agg,
        replicate_seeds: seeds(c),
        pass: true,
    })
}

fn lil_rows_csv(command: &str, runs: &[Vec<LilRow>]) -> Csv {
    let mut csv = Csv::new(
        command,
        &["n", "path_id", "stat", "running_max", "constant"],
    );
    for (id, rows) in runs.iter().enumerate() {
        for r in rows {
            csv.row(&[&r.n, &id, &r.stat, &r.running_max, &r.constant]);
        }
    }
    csv
}

/// Band summary of the final `running_max/constant` over paths.
fn band_summary(ratios: &[f64], band: (f64, f64)) -> Value {
    if ratios.is_empty() {
        return json!({ "band": band, "in_band": 0, "paths": 0 });
    }
    let inside = ratios
        .iter()
        .filter(|r| (band.0..=band.1).contains(*r))
        .count();
    json!({
        "label": "sanity band, not a limit check",
        "band": band,
        "in_band": inside,
        "paths": ratios.len(),
        "fraction": inside as f64 / ratios.len() as f64,
        "q05": quantile(ratios, 0.05),
        "median": quantile(ratios, 0.5),
        "q95": quantile(ratios, 0.95),
    })
}

pub fn lil(c: &ExperimentConfig) -> Result<Outcome> {
    let kind = c.kind.unwrap_or(match c.mode {
        Mode::Positive => LilKind::WalkHat,
        Mode::Negative => LilKind::WalkCheck,
    });
    let cfg = walk_config(c)?;
    let m = derived_moments(&c.dist, c.p)?;
    let grid = sparse_grid(c);
    let runs = Parallelism::from_env().map_replicates(c.paths, |i| {
        lil_path(&cfg, &m, kind, c.n, &grid, c.seed, i, c.burn_in)
    });
    let mut traces = Vec::with_capacity(c.paths);
    let mut ratios = Vec::new();
    let mut constant = None;
    for r in runs {
        let (tracker, rows) = r?;
        constant = Some(tracker.constant);
        if let Some(x) = tracker.ratio() {
            ratios.push(x);
        }
        traces.push(rows);
    }
    let agg = json!({
        "kind": kind,
        "n": c.n,
        "constant": constant,
        "running_max_over_constant": band_summary(&ratios, c.band.unwrap_or((0.4, 1.3))),
    });
    Ok(Outcome {
        csv: Some(lil_rows_csv("lil", &traces)),
        aggregates: agg,
        replicate_seeds: seeds(c),
        pass: true,
    })
}

pub fn bm(c: &ExperimentConfig) -> Result<Outcome> {
    let grid = sparse_grid(c);
    let traces = Parallelism::from_env()
        .map_replicates(c.paths, |i| bm_lil_path(c.n, &grid, c.seed, i, c.burn_in));
    let ratios: Vec<f64> = traces
        .iter()
        .filter_map(|rows| rows.last().filter(|r| r.n == c.n).map(|r| r.running_max))
        .collect();
    let agg = json!({
        "statistic": "eta(t, 1) = W(t)/sqrt(2 t LL t)",
        "n": c.n,
        "constant": 1.0,
        "running_max_over_constant": band_summary(&ratios, c.band.unwrap_or((0.7, 1.15))),
    });
    Ok(Outcome {
        csv: Some(lil_rows_csv("bm", &traces)),
        aggregates: agg,
        replicate_seeds: seeds(c),
        pass: true,
    })
}

pub fn verify(c: &ExperimentConfig) -> Result<Outcome> {
    let suites: Vec<Suite> = if c.suites.is_empty() || c.suites.iter().any(|s| s == "all") {
        Suite::ALL.to_vec()
    } else {
        c.suites
            .iter()
            .map(|s| s.parse::<Suite>().map_err(anyhow::Error::from))
            .collect::<Result<_>>()?
    };
    let ctx = VerifyContext::new(c.seed, Parallelism::from_env());
    let reports = run_suites(&suites, &ctx)?;
    let mut csv = Csv::new(
        "verify",
        &[
            "criterion",
            "suite",
            "check",
            "measured",
            "lo",
            "hi",
            "pass",
        ],
    );
    for r in &reports {
        eprintln!("{}", r.summary_line());
        for ch in &r.checks {
            let label = format!("\"{}\"", ch.label.replace('"', "'"));
            csv.row(&[
                &r.id,
                &r.suite.name(),
                &label,
                &ch.measured,
                &ch.lo,
                &ch.hi,
                &ch.pass,
            ]);
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(Outcome {
        csv: Some(csv),
        aggregates: serde_json::to_value(&reports)?,
        replicate_seeds: Vec::new(),
        pass,
    })
}

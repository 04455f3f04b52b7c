use num_traits::{FromPrimitive, ToPrimitive};
use stepwalk::coeffs::{build_coeff_table, Mode};
use stepwalk::exact::{
    com_variance, enumerate_plans, exact_distribution, martingale_transform, mean_recursion,
    step_moments, var_recursion, ENUMERATION_CAP,
};
use stepwalk::parallel::Parallelism;
use stepwalk::reinforce::{Walk, WalkConfig};
use stepwalk::steps::{StepDistribution, TruncationRule};
use stepwalk::{ExactDistributionQ, Rational};

fn q(x: f64) -> Rational {
    Rational::from_f64(x).unwrap()
}

#[test]
fn enumeration_moments_match_recursions_in_floats() {
    let rule = TruncationRule::disabled();
    let dist = StepDistribution::Rademacher;
    for mode in [Mode::Positive, Mode::Negative] {
        for p in [0.0, 0.25, 0.5, 0.75] {
            let means = mean_recursion::<f64>(8, p, mode, &dist, &rule).unwrap();
            let vars = var_recursion::<f64>(8, p, mode, &dist, &rule).unwrap();
            for n in 1..=8 {
                let law = exact_distribution::<f64>(n, p, mode, &dist, &rule).unwrap();
                assert!((law.total_mass() - 1.0).abs() < 1e-12);
                assert!((law.mean() - means[n - 1]).abs() < 1e-10);
                assert!(
                    (law.variance() - vars[n - 1]).abs() < 1e-10,
                    "{mode:?} p={p} n={n}"
                );
            }
        }
    }
}

#[test]
fn rational_recursions_are_exact_for_a_skewed_law() {
    let dist = StepDistribution::discrete(vec![-1.0, 0.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
    let rule = TruncationRule::disabled();
    for mode in [Mode::Positive, Mode::Negative] {
        let p = q(0.375);
        let means = mean_recursion(6, p.clone(), mode, &dist, &rule).unwrap();
        let vars = var_recursion(6, p.clone(), mode, &dist, &rule).unwrap();
        for n in 1..=6 {
            let law: ExactDistributionQ =
                exact_distribution(n, p.clone(), mode, &dist, &rule).unwrap();
            assert_eq!(law.mean(), means[n - 1]);
            assert_eq!(law.variance(), vars[n - 1]);
        }
    }
}

#[test]
fn plan_masses_sum_to_one() {
    for n in 1..=8 {
        let total: f64 = enumerate_plans(n, 0.3f64).unwrap().map(|pl| pl.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert!(enumerate_plans(ENUMERATION_CAP + 1, 0.3f64).is_err());
}

/// All histories of length `len` over `atoms`, with their atom indices.
fn histories(atoms: &[f64], len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|h| {
                atoms.iter().map(move |&a| {
                    let mut g = h.clone();
                    g.push(a);
                    g
                })
            })
            .collect();
    }
    out
}

#[test]
fn martingale_differences_have_zero_conditional_mean() {
    let dists = [
        StepDistribution::Rademacher,
        StepDistribution::discrete(vec![-1.0, 0.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap(),
    ];
    let rule = TruncationRule::disabled();
    for dist in &dists {
        let law = dist.atoms().unwrap();
        let m = dist.moments();
        for mode in [Mode::Positive, Mode::Negative] {
            // realized steps range over the atoms and, under negation, their mirror images
            let mut values: Vec<f64> = law.iter().map(|a| a.0).collect();
            if mode == Mode::Negative {
                values.extend(law.iter().map(|a| -a.0));
                values.sort_by(f64::total_cmp);
                values.dedup();
            }
            let atoms: Vec<(f64, f64)> = values
                .iter()
                .map(|&v| (v, law.iter().find(|a| a.0 == v).map_or(0.0, |a| a.1)))
                .collect();
            for p in [0.25, 0.6] {
                let table = build_coeff_table(mode, p, 5).unwrap();
                let sm = step_moments::<f64>(dist, &rule, 5);
                let sign = mode.sign() as f64;
                for n in 2..=5 {
                    for h in histories(&values, n - 1) {
                        let mut mean = 0.0;
                        let mut second = 0.0;
                        let mut cond_var = 0.0;
                        for &(z, fresh_prob) in &atoms {
                            // the next realized step: fresh draw or a signed copy of a uniform past step
                            let copies = h.iter().filter(|&&x| sign * x == z).count() as f64;
                            let prob = (1.0 - p) * fresh_prob + p * copies / (n - 1) as f64;
                            let mut path = h.clone();
                            path.push(z);
                            let d =
                                martingale_transform(&path, p, mode, &table, &sm, m.1 - m.0 * m.0)
                                    .unwrap();
                            let y = d.increments[n - 1];
                            mean += prob * y;
                            second += prob * y * y;
                            cond_var = d.cond_var[n - 1];
                        }
                        assert!(mean.abs() < 1e-12, "{mode:?} p={p} n={n} h={h:?}: {mean}");
                        assert!((second - cond_var).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn telescoping_holds_on_simulated_paths() {
    let dist = StepDistribution::gaussian(0.3, 1.5).unwrap();
    let rule = TruncationRule::enabled_default();
    for mode in [Mode::Positive, Mode::Negative] {
        let p = 0.35;
        let cfg = WalkConfig::new(mode, p, dist.clone())
            .unwrap()
            .with_truncation(rule);
        let n = 20_000;
        let mut w = Walk::new(cfg, 4, 0).unwrap();
        w.run_silent(n);
        let table = build_coeff_table(mode, p, n).unwrap();
        let sm = step_moments::<f64>(&dist, &rule, n);
        let d = martingale_transform(&w.realized_values(), p, mode, &table, &sm, 2.25).unwrap();
        // rounding accumulates in proportion to the size of the summands a_k S_k
        let scale = (1..=n)
            .map(|k| table.a(k).unwrap() * (k as f64) * 2.0)
            .fold(1.0f64, f64::max);
        for (t, m) in d.telescoped.iter().zip(&d.martingale) {
            assert!(
                (t - m).abs() < 1e-12 * scale * (n as f64).sqrt(),
                "{t} vs {m}"
            );
        }
    }
}

#[test]
fn simulated_pmf_matches_enumeration() {
    let law = exact_distribution(
        6,
        q(0.3),
        Mode::Positive,
        &StepDistribution::Rademacher,
        &TruncationRule::disabled(),
    )
    .unwrap();
    let r = 1_000_000usize;
    let cfg = WalkConfig::rademacher(Mode::Positive, 0.3).unwrap();
    let ends = Parallelism::from_env().map_replicates(r, |i| {
        let mut w = Walk::new(cfg.clone(), 21, i).unwrap();
        w.run_silent(6);
        w.position() as i64
    });
    for (x, prob) in law.iter() {
        let prob = prob.to_f64().unwrap();
        let x = x.to_f64().unwrap() as i64;
        let freq = ends.iter().filter(|&&s| s == x).count() as f64 / r as f64;
        let se = (prob * (1.0 - prob) / r as f64).sqrt();
        assert!(
            (freq - prob).abs() <= 4.0 * se,
            "S_6 = {x}: {freq} vs {prob}"
        );
    }
}

#[test]
fn center_of_mass_variance_matches_simulation() {
    let n = 30;
    let r = 200_000usize;
    for mode in [Mode::Positive, Mode::Negative] {
        let exact = com_variance(
            n,
            0.3f64,
            mode,
            &StepDistribution::Rademacher,
            &TruncationRule::disabled(),
        )
        .unwrap();
        let cfg = WalkConfig::rademacher(mode, 0.3).unwrap();
        let gs = Parallelism::from_env().map_replicates(r, |i| {
            let mut w = Walk::new(cfg.clone(), 22, i).unwrap();
            w.run_silent(n);
            w.com_sum() / n as f64
        });
        let mean = gs.iter().sum::<f64>() / r as f64;
        let var = gs.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
        let m4 = gs.iter().map(|g| (g - mean).powi(4)).sum::<f64>() / r as f64;
        let se = ((m4 - var * var) / r as f64).sqrt();
        assert!(
            (var - exact).abs() <= 4.0 * se,
            "{mode:?}: {var} vs {exact}"
        );
    }
}

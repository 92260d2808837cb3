mod common;

use common::*;
use evigraph_core::dag::{Family, ModelFormula};
use evigraph_core::data::{ColumnData, ColumnKind, ColumnMeta, DatasetMeta, DatasetTable};
use evigraph_core::stats::bayes::{baseline_probability_draws, sample_posterior, BinomialProblem};
use evigraph_core::stats::diagnostics::{durbin_watson_statistic, shapiro_wilk};
use evigraph_core::stats::linear::ols;
use evigraph_core::stats::rank::{mann_whitney_exact_p, mann_whitney_normal_p};
use evigraph_core::stats::{
    fit_bayes_binomial, fit_linear_mixed_model, fit_linear_model, Conclusion, InterceptPrior, McmcConfig,
    MethodKind, MethodSpec, PriorConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn numeric_table(cols: Vec<(&str, ColumnKind, ColumnData)>) -> DatasetTable {
    let meta = DatasetMeta::new(cols.iter().map(|(n, k, _)| ColumnMeta::new(*n, *k)).collect());
    DatasetTable::from_columns(meta, cols.into_iter().map(|(n, _, d)| (n.to_string(), d)).collect()).unwrap()
}

fn gaussian(response: &str, predictors: &[&str], groups: &[&str]) -> ModelFormula {
    ModelFormula {
        response: response.into(),
        predictors: predictors.iter().map(|s| s.to_string()).collect(),
        random_intercepts: groups.iter().map(|s| s.to_string()).collect(),
        family: Family::Gaussian,
    }
}

#[test]
fn exact_mann_whitney_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let na = rng.gen_range(1..=7);
        let nb = rng.gen_range(1..=7);
        let mut values: Vec<f64> = (0..na + nb).map(|v| v as f64).collect();
        values.shuffle(&mut rng);
        let (a, b) = values.split_at(na);
        let p = mann_whitney_exact_p(a, b).unwrap();
        assert!((p - oracle_mwu_exact_p(a, b)).abs() < 1e-12);
    }
}

#[test]
fn normal_approximation_tracks_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let na = rng.gen_range(5..=10);
        let nb = rng.gen_range(5..=10);
        let a: Vec<f64> = (0..na).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.gen::<f64>() + 0.3).collect();
        let exact = mann_whitney_exact_p(&a, &b).unwrap();
        worst = worst.max((exact - mann_whitney_normal_p(&a, &b)).abs());
    }
    assert!(worst < 0.02, "worst discrepancy {worst}");
}

#[test]
fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let noise = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..100 {
        let n = 50;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![1.0, noise.sample(&mut rng), noise.sample(&mut rng) * 3.0, rng.gen::<f64>()])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 + r[1] - 2.0 * r[2] + 0.3 * r[3] + noise.sample(&mut rng))
            .collect();
        let x = DMatrix::from_fn(n, 4, |i, j| rows[i][j]);
        let fit = ols(&x, &DVector::from_vec(y.clone())).unwrap();
        let oracle = oracle_normal_equations(&rows, &y);
        for (a, b) in fit.beta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

/// Groups whose residual means are identical, so the ML group variance is 0.
fn zero_variance_table(seed: u64) -> DatasetTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (groups, per) = (8, 6);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut g = Vec::new();
    for k in 0..groups {
        let noise: Vec<f64> = (0..per).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = noise.iter().sum::<f64>() / per as f64;
        for (i, e) in noise.iter().enumerate() {
            let xi = (k * per + i) as f64 / 10.0;
            x.push(xi);
            y.push(1.0 + 2.0 * xi + e - mean);
            g.push(format!("g{k}"));
        }
    }
    numeric_table(vec![
        ("x", ColumnKind::Continuous, ColumnData::Numeric(x)),
        ("y", ColumnKind::Continuous, ColumnData::Numeric(y)),
        ("g", ColumnKind::Group, ColumnData::Labels(g)),
    ])
}

#[test]
fn mixed_model_collapses_to_ols() {
    let data = zero_variance_table(5);
    let lm = fit_linear_model(&data, &gaussian("y", &["x"], &[]), &MethodSpec::new("lm", MethodKind::LinearModel)).unwrap();
    let lmm = fit_linear_mixed_model(
        &data,
        &gaussian("y", &["x"], &["g"]),
        &MethodSpec::new("lmm", MethodKind::LinearMixedModel),
    )
    .unwrap();
    let (Conclusion::Coefficients(lm), Conclusion::Coefficients(lmm)) = (lm, lmm) else {
        panic!("unexpected variants")
    };
    assert!(lmm.variance_components[0].variance < 1e-6);
    for (a, b) in lm.coefficients.iter().zip(&lmm.coefficients) {
        assert!((a.estimate - b.estimate).abs() < 1e-4);
    }
    assert_eq!(lmm.fit.n_params, 4);
    assert!(lmm.fit.r2_conditional.unwrap() >= lmm.fit.r2_marginal);
}

#[test]
fn shapiro_wilk_null_calibration() {
    let mut rejections = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e: Vec<f64> = (0..5000).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        if shapiro_wilk(&e).unwrap().p <= 0.01 {
            rejections += 1;
        }
        let d = durbin_watson_statistic(&e);
        assert!((1.9..=2.1).contains(&d), "{d}");
    }
    assert!(rejections <= 1);
}

#[test]
fn beta_binomial_conjugate_mean() {
    let data = numeric_table(vec![
        ("y", ColumnKind::Count, ColumnData::Numeric(vec![7.0])),
        ("n", ColumnKind::Count, ColumnData::Numeric(vec![10.0])),
        ("x", ColumnKind::Binary, ColumnData::Numeric(vec![0.0])),
    ]);
    let formula = ModelFormula {
        response: "y".into(),
        predictors: vec!["x".into()],
        random_intercepts: vec![],
        family: Family::Binomial { trials: "n".into() },
    };
    let problem = BinomialProblem::from_table(&data, &formula).unwrap();
    let prior = PriorConfig { intercept: InterceptPrior::UniformProbability, ..Default::default() };
    let draws = sample_posterior(&problem, &prior, &McmcConfig { seed: 3, ..Default::default() }).unwrap();
    let p = baseline_probability_draws(&problem, &draws);
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    assert!((mean - 8.0 / 12.0).abs() < 0.02, "{mean}");
}

#[test]
fn constant_treatment_gives_symmetric_signs() {
    let rows = 20;
    let data = numeric_table(vec![
        ("y", ColumnKind::Count, ColumnData::Numeric((0..rows).map(|i| (i % 6) as f64).collect())),
        ("n", ColumnKind::Count, ColumnData::Numeric(vec![6.0; rows])),
        ("x", ColumnKind::Binary, ColumnData::Numeric(vec![1.0; rows])),
    ]);
    let formula = ModelFormula {
        response: "y".into(),
        predictors: vec!["x".into()],
        random_intercepts: vec![],
        family: Family::Binomial { trials: "n".into() },
    };
    let mut spec = MethodSpec::new("b", MethodKind::BayesBinomial);
    spec.mcmc = Some(McmcConfig { seed: 9, warmup: 500, samples: 1000, ..Default::default() });
    let Conclusion::Posterior(c) = fit_bayes_binomial(&data, &formula, &spec).unwrap() else {
        panic!()
    };
    let s = c.sign_probabilities;
    assert!((s.fewer - s.more).abs() < 0.03, "{s:?}");
    assert!((s.fewer + s.equal + s.more - 1.0).abs() < 1e-9);
    assert!(c.reliable, "R-hat {}", c.max_rhat);
    let again = fit_bayes_binomial(&data, &formula, &spec).unwrap();
    assert_eq!(Conclusion::Posterior(c), again);
}

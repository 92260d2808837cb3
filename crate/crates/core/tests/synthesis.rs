use evigraph_core::dag::{Family, ModelFormula};
use evigraph_core::data::{ColumnData, ColumnKind, ColumnMeta, DatasetMeta, DatasetTable};
use evigraph_core::stats::Conclusion;
use evigraph_core::synthesis::{check_agreement, pool_effects, pool_ipd, AgreementBasis, PoolModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn fixed_effect_interval_covers_nominally() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let runs = 2000;
    let mut covered = 0;
    for _ in 0..runs {
        let studies: Vec<(f64, f64)> = (0..5)
            .map(|_| {
                let se = rng.gen_range(0.1..0.5);
                (0.3 + se * rng.sample::<f64, _>(StandardNormal), se)
            })
            .collect();
        if pool_effects(&studies, PoolModel::Fixed, 0.95).unwrap().ci.contains(0.3) {
            covered += 1;
        }
    }
    let rate = covered as f64 / runs as f64;
    assert!((rate - 0.95).abs() < 0.015, "{rate}");
}

#[test]
fn random_effects_reduce_to_fixed_when_homogeneous() {
    let studies = [(0.5, 0.1), (0.5, 0.2), (0.5, 0.3)];
    let fixed = pool_effects(&studies, PoolModel::Fixed, 0.95).unwrap();
    let random = pool_effects(&studies, PoolModel::Random, 0.95).unwrap();
    assert_eq!(random.tau2, 0.0);
    assert!((fixed.estimate - random.estimate).abs() < 1e-12);
    // inverse-variance weights 100, 25, 11.1
    let w: f64 = 100.0 + 25.0 + 1.0 / 0.09;
    assert!((fixed.std_error - (1.0 / w).sqrt()).abs() < 1e-12);
}

#[test]
fn heterogeneity_widens_random_effects() {
    let studies = [(0.0, 0.1), (1.0, 0.1), (2.0, 0.1)];
    let fixed = pool_effects(&studies, PoolModel::Fixed, 0.95).unwrap();
    let random = pool_effects(&studies, PoolModel::Random, 0.95).unwrap();
    // Q = 200, C = 300 − 30000/300 = 200, tau² = (200 − 2)/200
    assert!((random.tau2 - 0.99).abs() < 1e-12);
    assert!(random.std_error > fixed.std_error);
    assert!(pool_effects(&[(0.1, 0.1)], PoolModel::Fixed, 0.95).is_err());
    assert!(pool_effects(&[(0.1, 0.0), (0.2, 0.1)], PoolModel::Fixed, 0.95).is_err());
}

fn study(seed: u64, offset: f64) -> DatasetTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 80;
    let x: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let y: Vec<f64> = x.iter().map(|xi| offset + 0.8 * xi + rng.sample::<f64, _>(StandardNormal)).collect();
    let meta = DatasetMeta::new(vec![
        ColumnMeta::new("x", ColumnKind::Binary),
        ColumnMeta::new("y", ColumnKind::Continuous),
    ]);
    DatasetTable::from_columns(meta, vec![("x".into(), ColumnData::Numeric(x)), ("y".into(), ColumnData::Numeric(y))])
        .unwrap()
}

#[test]
fn ipd_pooling_absorbs_study_offsets() {
    let (a, b, c) = (study(1, 0.0), study(2, 3.0), study(3, -2.0));
    let f = ModelFormula {
        response: "y".into(),
        predictors: vec!["x".into()],
        random_intercepts: vec![],
        family: Family::Gaussian,
    };
    let Conclusion::Coefficients(pooled) = pool_ipd(&[&a, &b, &c], &f, 0.95).unwrap() else { panic!() };
    let t = pooled.treatment_coefficient().unwrap();
    assert!(t.ci.contains(0.8), "{t:?}");
    assert_eq!(pooled.fit.n_obs, 240);
    assert!(pooled.variance_components[0].variance > 1.0);
    assert!(pool_ipd(&[&a], &f, 0.95).is_err());
}

#[test]
fn agreement_is_symmetric() {
    let fixture = evigraph_core::fixtures::table2();
    let ids: Vec<&String> = fixture.graph.evidence.keys().collect();
    for a in &ids {
        for b in &ids {
            let (ca, cb) = (&fixture.graph.evidence[*a].conclusion, &fixture.graph.evidence[*b].conclusion);
            match (check_agreement(ca, cb, 0.05), check_agreement(cb, ca, 0.05)) {
                (Ok(x), Ok(y)) => {
                    assert_eq!(x.agrees, y.agrees, "{a} vs {b}");
                    assert_eq!(x.basis, y.basis);
                    if x.basis == AgreementBasis::IntervalOverlap {
                        assert_eq!(x.detail.overlap, y.detail.overlap);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => panic!("asymmetric failure for {a} vs {b}"),
            }
        }
    }
}

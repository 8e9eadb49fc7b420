mod support;

use proptest::prelude::*;
use qsim_core::stats::{
    correlation_matrix, kendall_counts, kendall_tau_b, pearson, CorrelationMethod, KendallCounts,
    MeasureMatrix,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use support::*;

#[test]
fn kendall_matches_pair_enumeration_exactly() {
    let mut rng = rng(7);
    for case_no in 0..200 {
        let n = rng.random_range(3..=200);
        let x = tied_series(&mut rng, n);
        let y = tied_series(&mut rng, n);
        let (n0, tx, ty, s) = kendall_pairs(&x, &y);
        let want = KendallCounts {
            n0,
            ties_x: tx,
            ties_y: ty,
            concordant_minus_discordant: s,
        };
        assert_eq!(kendall_counts(&x, &y), want, "case {case_no}");
        let got = kendall_tau_b::<f64>(&x, &y);
        assert_eq!(got, want.tau_b(), "case {case_no}");
        if let Ok(t) = got {
            let direct = s as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt();
            assert!((t - direct).abs() < 1e-15);
        }
    }
}

#[test]
fn kendall_hand_case() {
    let t: f64 = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((t - 5.0 / 30f64.sqrt()).abs() < 1e-15);
}

#[test]
fn two_observations_are_undefined() {
    assert!(matches!(
        kendall_tau_b::<f64>(&[1.0, 2.0], &[2.0, 1.0]),
        Err(qsim_core::stats::Undefined::TooFewObservations { n: 2, required: 3 })
    ));
    assert!(pearson::<f64>(&[1.0, 2.0], &[2.0, 1.0]).is_err());
}

#[test]
fn independent_columns_are_nearly_uncorrelated() {
    let mut rng = rng(2024);
    let cols: Vec<(String, Vec<f64>)> = (0..3)
        .map(|j| {
            (
                format!("c{j}"),
                (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect(),
            )
        })
        .collect();
    let m = MeasureMatrix::from_columns(cols).unwrap();
    for method in [CorrelationMethod::Pearson, CorrelationMethod::Kendall] {
        let c = correlation_matrix(&m, method);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(c.get(i, j).unwrap().abs() < 0.15);
                }
            }
        }
    }
}

#[test]
fn duplicate_column_correlates_perfectly_and_short_overlap_is_masked() {
    let mut m = MeasureMatrix::new(vec!["a".into(), "a2".into(), "sparse".into()]).unwrap();
    for i in 0..10 {
        let v = (i * i) as f64;
        let sparse = (i < 2).then_some(i as f64);
        m.push_row(
            qsim_core::stats::RowKey {
                simulator_id: "s".into(),
                session_id: i.to_string(),
                rank: 1,
            },
            vec![Some(v), Some(v), sparse],
        )
        .unwrap();
    }
    let c = correlation_matrix(&m, CorrelationMethod::Pearson);
    assert_eq!(c.get(0, 1), Some(1.0));
    assert_eq!(c.get(0, 2), None);
    assert_eq!(c.pair_count(0, 2), 2);
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1e3f64..1e3, 3..60)
}

proptest! {
    #[test]
    fn kendall_invariant_under_increasing_maps(x in series(), seed in any::<u64>()) {
        let y = tied_series(&mut rng(seed), x.len());
        let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 7.0).collect();
        let gy: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        prop_assert_eq!(kendall_tau_b::<f64>(&x, &y), kendall_tau_b(&fx, &gy));
    }

    #[test]
    fn pearson_affine_invariance(x in series(), y in series(), a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        match (pearson(x, y), pearson(&ax, y)) {
            (Ok(r1), Ok(r2)) => prop_assert!((r1 - r2).abs() < 1e-9, "{} vs {}", r1, r2),
            (r1, r2) => prop_assert_eq!(r1.is_ok(), r2.is_ok()),
        }
    }

    #[test]
    fn correlations_are_symmetric_and_bounded(x in series(), y in series()) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        for r in [pearson(x, y), kendall_tau_b(x, y)].into_iter().flatten() {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        prop_assert_eq!(kendall_tau_b::<f64>(x, y), kendall_tau_b(y, x));
        if let (Ok(a), Ok(b)) = (pearson::<f64>(x, y), pearson(y, x)) {
            prop_assert_eq!(a, b);
        }
    }
}

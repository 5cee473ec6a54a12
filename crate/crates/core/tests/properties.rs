use convexreg::{
    characterization_report, evaluate, fit_convex_lse, hinge_representation, left_derivative,
    ConvexFit, Dataset, ToleranceConfig,
};
use proptest::prelude::*;

fn data() -> impl Strategy<Value = Dataset> {
    (3usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_filter_map("need two distinct x", |(x, y)| Dataset::from_xy(&x, &y).ok())
    })
}

fn fit(ds: &Dataset) -> ConvexFit {
    fit_convex_lse(ds, &ToleranceConfig::default()).unwrap().0
}

/// Values of a convex function at the design points.
fn convex_values() -> impl Strategy<Value = (f64, f64, Vec<(f64, f64)>)> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        prop::collection::vec((0.0f64..1.0, 0.0f64..4.0), 0..5),
    )
}

fn eval_convex(c: &(f64, f64, Vec<(f64, f64)>), t: f64) -> f64 {
    c.2.iter().fold(c.0 + c.1 * t, |acc, &(loc, b)| acc + b * (t - loc).max(0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_lies_in_cone_and_is_certified(ds in data()) {
        let f = fit(&ds);
        prop_assert!(f.cone_violation(&ds) <= 1e-9 * ds.scale());
        let report = characterization_report(&ds, &f, &ToleranceConfig::default()).unwrap();
        prop_assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn projection_is_idempotent(ds in data()) {
        let f = fit(&ds);
        let again = fit(&ds.with_responses(f.fitted().to_vec()).unwrap());
        for (a, b) in f.fitted().iter().zip(again.fitted()) {
            prop_assert!((a - b).abs() <= 1e-9 * ds.scale());
        }
    }

    #[test]
    fn affine_and_scale_equivariance(ds in data(), a in -3.0f64..3.0, b in -3.0f64..3.0, s in 0.1f64..10.0) {
        let f = fit(&ds);
        let y2: Vec<f64> = ds.y().iter().zip(ds.x()).map(|(y, x)| s * y + a + b * x).collect();
        let g = fit(&ds.with_responses(y2).unwrap());
        let tol = 1e-8 * (s * ds.scale() + a.abs() + b.abs());
        for ((fi, gi), x) in f.fitted().iter().zip(g.fitted()).zip(ds.x()) {
            prop_assert!((s * fi + a + b * x - gi).abs() <= tol);
        }
    }

    #[test]
    fn variational_inequality_and_dominance(ds in data(), c in convex_values()) {
        let f = fit(&ds);
        let w = ds.weights();
        let g: Vec<f64> = ds.x().iter().map(|&t| eval_convex(&c, t)).collect();
        let res: Vec<f64> = ds.y().iter().zip(f.fitted()).map(|(y, fi)| y - fi).collect();
        let norm = ds.total_weight() * ds.scale() * (ds.scale() + g.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let inner: f64 = (0..ds.len()).map(|i| w[i] * g[i] * res[i]).sum();
        let orth: f64 = (0..ds.len()).map(|i| w[i] * f.fitted()[i] * res[i]).sum();
        prop_assert!(inner <= 1e-8 * norm);
        prop_assert!(orth.abs() <= 1e-8 * norm);
        let other: f64 = (0..ds.len()).map(|i| w[i] * (ds.y()[i] - g[i]).powi(2)).sum();
        prop_assert!(f.objective(&ds) <= other + 1e-8 * norm);
    }

    #[test]
    fn evaluation_is_convex_and_derivative_monotone(ds in data(), mut ts in prop::collection::vec(0.0f64..=1.0, 2..20)) {
        let f = fit(&ds);
        ts.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for &t in &ts {
            let d = left_derivative(&f, &ds, t).unwrap();
            prop_assert!(d >= prev - 1e-7 * (1.0 + d.abs().max(prev.abs())));
            prev = prev.max(d);
        }
        for w in ts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = evaluate(&f, &ds, 0.5 * (a + b)).unwrap();
            let chord = 0.5 * (evaluate(&f, &ds, a).unwrap() + evaluate(&f, &ds, b).unwrap());
            prop_assert!(mid <= chord + 1e-9 * ds.scale());
        }
    }

    #[test]
    fn hinge_representation_round_trips(ds in data()) {
        let f = fit(&ds);
        let h = hinge_representation(&f, &ds);
        prop_assert!(h.hinges.iter().all(|k| k.coeff > 0.0));
        prop_assert_eq!(h.hinges.len(), f.kinks().len());
        for (x, v) in ds.x().iter().zip(f.fitted()) {
            prop_assert!((h.eval(*x) - v).abs() <= 1e-9 * ds.scale());
        }
    }
}

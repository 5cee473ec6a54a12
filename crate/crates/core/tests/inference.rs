use convexreg::simulation::{replicate_fits, ReplicateConfig, ScenarioKind};
use convexreg::stats::{median, quantile};
use convexreg::{
    argmin_estimator, boundary_diagnostics, evaluate, fit_convex_lse, left_derivative,
    local_estimates, scaling_constants, Dataset, ToleranceConfig,
};

fn wiggly(n: usize) -> Dataset {
    let x: Vec<f64> = (0..n).map(|i| ((i * 37 % n) as f64 + 0.3) / n as f64).collect();
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| 5.0 * (v - 0.62).powi(2) + 0.4 * (((i * 13) % 7) as f64 / 7.0 - 0.5))
        .collect();
    Dataset::from_xy(&x, &y).unwrap()
}

#[test]
fn argmin_attains_global_minimum_of_evaluate() {
    let ds = wiggly(120);
    let (fit, _) = fit_convex_lse(&ds, &ToleranceConfig::default()).unwrap();
    let a = argmin_estimator(&fit, &ds);
    let (lo, hi) = (ds.x()[0], ds.x()[ds.len() - 1]);
    for k in 0..=2000 {
        let t = lo + (hi - lo) * k as f64 / 2000.0;
        assert!(evaluate(&fit, &ds, t).unwrap() >= a.value - 1e-12);
    }
    assert!(ds.x().contains(&a.location));
}

#[test]
fn boundary_slopes_bracket_interior_derivatives() {
    let ds = wiggly(200);
    let (fit, _) = fit_convex_lse(&ds, &ToleranceConfig::default()).unwrap();
    let b = boundary_diagnostics(&fit, &ds);
    for &t in ds.x() {
        let d = left_derivative(&fit, &ds, t).unwrap();
        assert!(b.deriv_at_0 <= d + 1e-9 && d <= b.deriv_at_1 + 1e-9);
    }
    assert!((evaluate(&fit, &ds, 0.0).unwrap() - b.value_at_0).abs() < 1e-9);
    assert!((evaluate(&fit, &ds, 1.0).unwrap() - b.value_at_1).abs() < 1e-9);
}

#[test]
fn scaling_constants_match_high_precision_values() {
    // 15^(1/9) and 15^(1/3) to 30 digits
    let (d1, d2) = scaling_constants(4, 1.0, 48.0).unwrap();
    assert!((d1 - 1.351_066_751_601_770_831).abs() < 1e-14);
    assert!((d2 - 2.466_212_074_330_470_101).abs() < 1e-14);
}

#[test]
fn scaling_constants_decrease_in_sigma_and_derivative() {
    for r in [2, 4, 6] {
        let (a1, a2) = scaling_constants(r, 1.0, 10.0).unwrap();
        let (b1, b2) = scaling_constants(r, 1.5, 10.0).unwrap();
        let (c1, c2) = scaling_constants(r, 1.0, 20.0).unwrap();
        assert!(b1 < a1 && b2 < a2);
        assert!(c1 < a1 && c2 < a2);
    }
}

#[test]
fn noiseless_piecewise_linear_truth_has_zero_local_deviation() {
    let truth = |t: f64| (t - 0.5).abs() + 0.5 * (t - 0.25).max(0.0);
    let x: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let y: Vec<f64> = x.iter().map(|&t| truth(t)).collect();
    let ds = Dataset::from_xy(&x, &y).unwrap();
    let (fit, _) = fit_convex_lse(&ds, &ToleranceConfig::default()).unwrap();
    let est = local_estimates(&fit, &ds, 0.4, 0.3, Some(&truth)).unwrap();
    assert!(est.sup_deviation.unwrap() < 1e-12);
    assert!((est.value - truth(0.4)).abs() < 1e-12);
    assert!((est.left_derivative + 0.5).abs() < 1e-12);
}

#[test]
fn argmin_error_shrinks_with_n() {
    let grid = vec![500, 2000, 8000];
    let cfg = ReplicateConfig::new(ScenarioKind::VanishingDerivatives { r: 2 }, grid.clone(), 50, 606);
    let reps = replicate_fits(&cfg, |_, ds, fit| Ok((argmin_estimator(fit, ds).location - 0.5).abs())).unwrap();
    let meds: Vec<f64> = grid
        .iter()
        .map(|&n| median(&reps.iter().filter(|r| r.n == n).map(|r| r.value).collect::<Vec<_>>()))
        .collect();
    assert!(meds.windows(2).all(|w| w[1] <= w[0]), "{meds:?}");
}

#[test]
fn root_n_local_deviation_is_tight_under_affine_truth() {
    let grid = vec![500, 2000, 8000];
    let cfg = ReplicateConfig::new(ScenarioKind::Affine, grid.clone(), 60, 707);
    let reps = replicate_fits(&cfg, |spec, ds, fit| {
        let truth = |t: f64| spec.mean_function(t);
        let est = local_estimates(fit, ds, 0.5, 0.1, Some(&truth))?;
        Ok((ds.len() as f64).sqrt() * est.sup_deviation.unwrap())
    })
    .unwrap();
    let q: Vec<f64> = grid
        .iter()
        .map(|&n| quantile(&reps.iter().filter(|r| r.n == n).map(|r| r.value).collect::<Vec<_>>(), 0.9))
        .collect();
    let ratio = q.iter().copied().fold(0.0, f64::max) / q.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(ratio < 2.0, "{q:?}");
}

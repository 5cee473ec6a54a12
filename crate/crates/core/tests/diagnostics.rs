mod common;

use common::{enumeration_oracle, random_instance};
use convexreg::diagnostics::{conditions, g_value};
use convexreg::simulation::{replicate_fits, ReplicateConfig, ScenarioKind};
use convexreg::stats::median;
use convexreg::{
    characterization_report, g_process, segment_reports, tent_functional, tent_weight, ConvexFit,
    Dataset, ToleranceConfig,
};

fn oracle_fit(seed: u64, n: usize) -> (Dataset, ConvexFit) {
    let (x, y) = random_instance(n, seed);
    let ds = Dataset::from_xy(&x, &y).unwrap();
    let (fitted, _) = enumeration_oracle(&x, &y);
    let fit = ConvexFit::from_fitted(&ds, fitted, &ToleranceConfig::default()).unwrap();
    (ds, fit)
}

/// `Z(u, v)` through the identity `Z = (8 G(mid) - 4 G(u) - 4 G(v)) / (N (v - u))`,
/// valid whenever the residuals sum to zero against `1` and `x`.
fn tent_via_g(ds: &Dataset, fit: &ConvexFit, u: f64, v: f64) -> f64 {
    let g = |t: f64| g_value(ds, fit, t).unwrap();
    (8.0 * g(0.5 * (u + v)) - 4.0 * g(u) - 4.0 * g(v)) / (ds.total_weight() * (v - u))
}

#[test]
fn oracle_fits_satisfy_g_conditions() {
    for seed in 0..30 {
        let (ds, fit) = oracle_fit(500 + seed, 12);
        let g = g_process(&ds, &fit).unwrap();
        assert!(g.max_value <= 1e-9, "seed {seed}: {}", g.max_value);
        for (_, v) in &g.kink_values {
            assert!(v.abs() <= 1e-9);
        }
    }
}

#[test]
fn oracle_fits_satisfy_tent_and_segment_inequalities() {
    for seed in 0..30 {
        let (ds, fit) = oracle_fit(900 + seed, 12);
        let x = ds.x();
        let knots = fit.knots();
        for w in knots.windows(2) {
            let z = tent_functional(&ds, &fit, x[w[0]], x[w[1]]).unwrap();
            assert!(z <= 1e-9, "seed {seed}: Z = {z}");
        }
        for s in segment_reports(&ds, &fit).unwrap().segments {
            assert!(s.t1 <= 1e-9 && s.t2 <= 1e-9);
            assert!(s.open_t1 >= -1e-9 && s.open_t2 >= -1e-9);
            assert!(s.residual_at_u <= 1e-9);
            assert!(s.sup_gap <= s.gap_bound + 1e-9);
        }
    }
}

#[test]
fn tent_functional_matches_g_identity() {
    let (ds, fit) = oracle_fit(42, 12);
    for &(u, v) in &[(0.1, 0.7), (0.25, 0.3), (0.0, 1.0), (0.45, 0.95)] {
        let direct = tent_functional(&ds, &fit, u, v).unwrap();
        let via_g = tent_via_g(&ds, &fit, u, v);
        assert!((direct - via_g).abs() < 1e-12, "({u}, {v}): {direct} vs {via_g}");
    }
}

#[test]
fn tent_values_at_named_points() {
    let (u, v) = (0.3, 0.8);
    assert!((tent_weight(u, v, 0.55) + 1.0).abs() < 1e-12);
    for t in [0.0, 0.1, 0.9, 1.0] {
        assert_eq!(tent_weight(u, v, t), 1.0);
    }
}

#[test]
fn running_mean_fit_breaks_equality_at_kinks() {
    // Convex data, fit replaced by a cumulative mean: monotone but wrong.
    let x: Vec<f64> = (0..30).map(|i| (i as f64 + 0.5) / 30.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * (v - 0.3) * (v - 0.3)).collect();
    let ds = Dataset::from_xy(&x, &y).unwrap();
    let mut acc = 0.0;
    let fitted: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect();
    let fit = ConvexFit::from_fitted(&ds, fitted, &ToleranceConfig::default()).unwrap();
    let report = characterization_report(&ds, &fit, &ToleranceConfig::default()).unwrap();
    assert!(!report.passed);
    assert!(!report.condition(conditions::CUMULATIVE_ZERO_AT_KINKS).unwrap().passed);
}

#[test]
fn perturbed_fit_is_rejected_by_name() {
    let (ds, fit) = oracle_fit(7, 12);
    let mut f = fit.fitted().to_vec();
    f[5] += 0.01;
    let bad = ConvexFit::from_fitted(&ds, f, &ToleranceConfig::default()).unwrap();
    let report = characterization_report(&ds, &bad, &ToleranceConfig::default()).unwrap();
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    assert!(failed.contains(&conditions::RESIDUAL_SUM), "{failed:?}");
}

#[test]
fn central_segment_ols_gap_decays_under_affine_truth() {
    let grid = vec![500, 1000, 2000, 4000];
    let cfg = ReplicateConfig::new(ScenarioKind::Affine, grid.clone(), 30, 4242);
    let reps = replicate_fits(&cfg, |_, ds, fit| {
        // Segment through x0 = 0.5, whose length stays bounded below.
        Ok(segment_reports(ds, fit)?
            .segments
            .iter()
            .find(|s| s.u <= 0.5 && 0.5 <= s.v)
            .map_or(f64::NAN, |s| s.sup_gap))
    })
    .unwrap();
    let medians: Vec<f64> = grid
        .iter()
        .map(|&n| median(&reps.iter().filter(|r| r.n == n).map(|r| r.value).collect::<Vec<_>>()))
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

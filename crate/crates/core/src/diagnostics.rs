//! Finite-sample characterization objects of a convex fit.
//!
//! Everything here is computed directly from `(dataset, fit)` and works for
//! arbitrary fits, so the same functions certify solver output and reject
//! bad fits. Sums are weighted by the duplicate-merge weights, which makes
//! them equal to the corresponding sums over the unmerged sample.
//!
//! Sign conventions: with residuals `r_i = y_i - fit_i`, the cumulative
//! process `G(x) = sum_{x_i <= x} r_i (x - x_i)` of an optimal fit is
//! **nonpositive** on `[x_1, x_n]` and vanishes at every kink. It is the
//! negative of the cumulative sums in [`crate::solver::KktSums`].

use serde::Serialize;

use crate::error::ModelError;
use crate::model::{ConvexFit, Dataset, ToleranceConfig};
use crate::solver::kkt_sums;

/// `G` evaluated at every design point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GProcess {
    pub values: Vec<f64>,
    pub min_value: f64,
    pub max_value: f64,
    /// `(design index, G)` for each kink.
    pub kink_values: Vec<(usize, f64)>,
}

/// Points where `G` breaks its sign or zero conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GFlags {
    pub positive_points: Vec<usize>,
    pub nonzero_kinks: Vec<usize>,
}

impl GFlags {
    pub fn is_clean(&self) -> bool {
        self.positive_points.is_empty() && self.nonzero_kinks.is_empty()
    }
}

impl GProcess {
    /// Flags with tolerance `kkt_tol * total_weight * scale`.
    pub fn flags(&self, dataset: &Dataset, config: &ToleranceConfig) -> GFlags {
        let tol = config.kkt_tol * dataset.total_weight() * dataset.scale();
        GFlags {
            positive_points: self
                .values
                .iter()
                .enumerate()
                .filter(|(_, &g)| g > tol)
                .map(|(i, _)| i)
                .collect(),
            nonzero_kinks: self
                .kink_values
                .iter()
                .filter(|(_, g)| g.abs() > tol)
                .map(|&(k, _)| k)
                .collect(),
        }
    }
}

/// `G` at every design point.
pub fn g_process(dataset: &Dataset, fit: &ConvexFit) -> Result<GProcess, ModelError> {
    fit.check_len(dataset)?;
    let (x, y, w) = (dataset.x(), dataset.y(), dataset.weights());
    let f = fit.fitted();
    let mut values = Vec::with_capacity(x.len());
    let mut g = 0.0;
    let mut partial = 0.0;
    for i in 0..x.len() {
        if i > 0 {
            g += partial * (x[i] - x[i - 1]);
        }
        values.push(g);
        partial += w[i] * (y[i] - f[i]);
    }
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kink_values = fit.kinks().iter().map(|&k| (k, values[k])).collect();
    Ok(GProcess {
        values,
        min_value,
        max_value,
        kink_values,
    })
}

/// `G(t)` at an arbitrary point by direct summation.
pub fn g_value(dataset: &Dataset, fit: &ConvexFit, t: f64) -> Result<f64, ModelError> {
    fit.check_len(dataset)?;
    Ok(dataset
        .x()
        .iter()
        .zip(dataset.y())
        .zip(dataset.weights())
        .zip(fit.fitted())
        .filter(|(((&xi, _), _), _)| xi <= t)
        .map(|(((xi, yi), wi), fi)| wi * (yi - fi) * (t - xi))
        .sum())
}

/// Tent perturbation: 1 outside `[u, v]`, descending linearly to -1 at the
/// midpoint.
pub fn tent_weight(u: f64, v: f64, x: f64) -> f64 {
    let mid = 0.5 * (u + v);
    1.0 - (2.0 - 4.0 / (v - u) * (x - mid).abs()).max(0.0)
}

/// `Z(u, v) = N^{-1} sum_i w_i f_{u,v}(x_i) (y_i - fit_i)`.
pub fn tent_functional(
    dataset: &Dataset,
    fit: &ConvexFit,
    u: f64,
    v: f64,
) -> Result<f64, ModelError> {
    fit.check_len(dataset)?;
    if !(u < v) {
        return Err(ModelError::InvalidArgument(format!(
            "tent needs u < v, got u={u}, v={v}"
        )));
    }
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(ModelError::InvalidArgument(format!(
            "tent endpoints must lie in [0, 1], got u={u}, v={v}"
        )));
    }
    let sum: f64 = dataset
        .x()
        .iter()
        .zip(dataset.y())
        .zip(dataset.weights())
        .zip(fit.fitted())
        .map(|(((&xi, yi), wi), fi)| wi * tent_weight(u, v, xi) * (yi - fi))
        .sum();
    Ok(sum / dataset.total_weight())
}

/// Residual sums and segment-OLS comparison on one affine piece `[u, v]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub u: f64,
    pub v: f64,
    pub start: usize,
    pub end: usize,
    /// Number of observations in `[u, v]`.
    pub count: f64,
    /// Closed-interval residual sum.
    pub t1: f64,
    /// Closed-interval first-moment residual sum.
    pub t2: f64,
    pub open_t1: f64,
    pub open_t2: f64,
    pub residual_at_u: f64,
    /// Reported only; no sign is asserted for it.
    pub residual_at_v: f64,
    pub ols_intercept: f64,
    pub ols_slope: f64,
    /// `max |ols(x_i) - fit(x_i)|` over the segment's design points.
    pub sup_gap: f64,
    /// Bound on `sup_gap` implied by `t1`, `t2` and the segment geometry.
    pub gap_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentAnalysis {
    pub segments: Vec<SegmentReport>,
    pub notes: Vec<String>,
}

/// Per-affine-piece sums, delimited by the fit's kinks and the data
/// boundary.
pub fn segment_reports(dataset: &Dataset, fit: &ConvexFit) -> Result<SegmentAnalysis, ModelError> {
    fit.check_len(dataset)?;
    let (x, y, w) = (dataset.x(), dataset.y(), dataset.weights());
    let f = fit.fitted();
    let mut segments = Vec::new();
    let mut notes = Vec::new();
    for pair in fit.knots().windows(2) {
        let (k1, k2) = (pair[0], pair[1]);
        if k2 < k1 + 1 {
            notes.push(format!("segment at index {k1} has fewer than 2 points; skipped"));
            continue;
        }
        let idx = k1..=k2;
        let count: f64 = idx.clone().map(|i| w[i]).sum();
        let res = |i: usize| y[i] - f[i];
        let t1: f64 = idx.clone().map(|i| w[i] * res(i)).sum();
        let t2: f64 = idx.clone().map(|i| w[i] * x[i] * res(i)).sum();
        let open_t1 = t1 - w[k1] * res(k1) - w[k2] * res(k2);
        let open_t2 = t2 - w[k1] * x[k1] * res(k1) - w[k2] * x[k2] * res(k2);

        let xbar = idx.clone().map(|i| w[i] * x[i]).sum::<f64>() / count;
        let ybar = idx.clone().map(|i| w[i] * y[i]).sum::<f64>() / count;
        let sxx: f64 = idx.clone().map(|i| w[i] * (x[i] - xbar).powi(2)).sum();
        let sxy: f64 = idx.clone().map(|i| w[i] * (x[i] - xbar) * (y[i] - ybar)).sum();
        let ols_slope = sxy / sxx;
        let ols_intercept = ybar - ols_slope * xbar;
        let sup_gap = idx
            .clone()
            .map(|i| (ols_intercept + ols_slope * x[i] - f[i]).abs())
            .fold(0.0, f64::max);
        let (u, v) = (x[k1], x[k2]);
        let gap_bound = (v - u) * ((xbar * t1 - t2) / sxx).abs() + t1.abs() / count;
        segments.push(SegmentReport {
            u,
            v,
            start: k1,
            end: k2,
            count,
            t1,
            t2,
            open_t1,
            open_t2,
            residual_at_u: res(k1),
            residual_at_v: res(k2),
            ols_intercept,
            ols_slope,
            sup_gap,
            gap_bound,
        });
    }
    Ok(SegmentAnalysis { segments, notes })
}

/// One checked condition; `worst` is the normalised size of the largest
/// violation (0 when none).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub conditions: Vec<ConditionCheck>,
    pub passed: bool,
}

impl KktReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.conditions
            .iter()
            .filter(|c| !c.passed && !c.informational)
    }
}

/// Condition names used in [`KktReport`].
pub mod conditions {
    pub const CONE: &str = "cone_membership";
    pub const ORTHOGONALITY: &str = "orthogonality";
    pub const TOTAL_BALANCE: &str = "total_balance";
    pub const CUMULATIVE_NONNEGATIVE: &str = "cumulative_nonnegative";
    pub const CUMULATIVE_ZERO_AT_KINKS: &str = "cumulative_zero_at_kinks";
    pub const RESIDUAL_SUM: &str = "residual_sum_zero";
    pub const RESIDUAL_MOMENT: &str = "residual_moment_zero";
    pub const G_NONPOSITIVE: &str = "g_nonpositive";
    pub const G_ZERO_AT_KINKS: &str = "g_zero_at_kinks";
    pub const SEGMENT_CLOSED_SUMS: &str = "segment_closed_sums";
    pub const SEGMENT_OPEN_SUMS: &str = "segment_open_sums";
    pub const SEGMENT_LEFT_RESIDUAL: &str = "segment_left_endpoint_residual";
    pub const SEGMENT_RIGHT_RESIDUAL: &str = "segment_right_endpoint_residual";
    pub const SEGMENT_GAP_BOUND: &str = "segment_ols_gap_bound";
    pub const TENT_KINK_PAIRS: &str = "tent_kink_pairs";
}

/// Checks every characterization condition of an optimal fit.
///
/// Cumulative and residual sums are normalised by `N * scale`, single
/// residuals, fitted-value gaps and the tent functional by `scale`, and the
/// orthogonality sum by `N * scale^2`.
pub fn characterization_report(
    dataset: &Dataset,
    fit: &ConvexFit,
    config: &ToleranceConfig,
) -> Result<KktReport, ModelError> {
    use conditions::*;
    fit.check_len(dataset)?;
    let tol = config.kkt_tol;
    let scale = dataset.scale();
    let big_n = dataset.total_weight();
    let sum_norm = big_n * scale;
    let (x, y, w) = (dataset.x(), dataset.y(), dataset.weights());
    let f = fit.fitted();
    let mut conditions = Vec::new();
    let mut push = |name: &str, worst: f64, informational: bool| {
        conditions.push(ConditionCheck {
            name: name.to_string(),
            passed: worst <= tol,
            worst,
            informational,
        });
    };

    push(CONE, fit.cone_violation(dataset) / scale, false);

    let orth: f64 = (0..x.len()).map(|i| w[i] * f[i] * (y[i] - f[i])).sum();
    push(ORTHOGONALITY, orth.abs() / (sum_norm * scale), false);

    let sums = kkt_sums(dataset, fit)?;
    push(TOTAL_BALANCE, sums.total_gap.abs() / sum_norm, false);
    push(CUMULATIVE_NONNEGATIVE, (-sums.min()).max(0.0) / sum_norm, false);
    let mut at_kinks = sums.cum.last().map_or(0.0, |c| c.abs());
    for &k in fit.kinks() {
        at_kinks = at_kinks.max(sums.at_index(k).abs());
    }
    push(CUMULATIVE_ZERO_AT_KINKS, at_kinks / sum_norm, false);

    let rsum: f64 = (0..x.len()).map(|i| w[i] * (y[i] - f[i])).sum();
    let rmom: f64 = (0..x.len()).map(|i| w[i] * x[i] * (y[i] - f[i])).sum();
    push(RESIDUAL_SUM, rsum.abs() / sum_norm, false);
    push(RESIDUAL_MOMENT, rmom.abs() / sum_norm, false);

    let g = g_process(dataset, fit)?;
    push(G_NONPOSITIVE, g.max_value.max(0.0) / sum_norm, false);
    let g_kinks = g.kink_values.iter().fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
    push(G_ZERO_AT_KINKS, g_kinks / sum_norm, false);

    let seg = segment_reports(dataset, fit)?;
    let mut closed = 0.0_f64;
    let mut open = 0.0_f64;
    let mut left = 0.0_f64;
    let mut right = 0.0_f64;
    let mut bound = 0.0_f64;
    for s in &seg.segments {
        closed = closed.max(s.t1).max(s.t2);
        open = open.max(-s.open_t1).max(-s.open_t2);
        left = left.max(s.residual_at_u);
        right = right.max(s.residual_at_v);
        bound = bound.max(s.sup_gap - s.gap_bound);
    }
    push(SEGMENT_CLOSED_SUMS, closed.max(0.0) / sum_norm, false);
    push(SEGMENT_OPEN_SUMS, open.max(0.0) / sum_norm, false);
    push(SEGMENT_LEFT_RESIDUAL, left.max(0.0) / scale, false);
    push(SEGMENT_RIGHT_RESIDUAL, right.max(0.0) / scale, true);
    push(SEGMENT_GAP_BOUND, bound.max(0.0) / scale, false);

    let kinks = fit.kinks();
    let mut tent = 0.0_f64;
    for (a, &ka) in kinks.iter().enumerate() {
        for &kb in &kinks[a + 1..] {
            tent = tent.max(tent_functional(dataset, fit, x[ka], x[kb])?);
        }
    }
    push(TENT_KINK_PAIRS, tent.max(0.0) / scale, false);

    let passed = conditions.iter().all(|c| c.passed || c.informational);
    Ok(KktReport { conditions, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::fit_convex_lse;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn wavy() -> Dataset {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 + 0.5) / 40.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 4.0 * (v - 0.4) * (v - 0.4) + 0.3 * ((i * 7 % 11) as f64 / 11.0 - 0.5))
            .collect();
        Dataset::from_xy(&x, &y).unwrap()
    }

    #[test]
    fn tent_shape() {
        let (u, v) = (0.2, 0.6);
        assert!((tent_weight(u, v, u) - 1.0).abs() < 1e-15);
        assert!((tent_weight(u, v, v) - 1.0).abs() < 1e-15);
        assert!((tent_weight(u, v, 0.4) + 1.0).abs() < 1e-15);
        assert_eq!(tent_weight(u, v, 0.1), 1.0);
        assert_eq!(tent_weight(u, v, 0.9), 1.0);
        assert!((tent_weight(u, v, 0.3)).abs() < 1e-15);
    }

    #[test]
    fn exact_fit_has_zero_diagnostics() {
        let x = [0.0, 0.2, 0.5, 0.9];
        let y = [1.0, 0.3, 0.2, 1.5];
        let ds = Dataset::from_xy(&x, &y).unwrap();
        let fit = ConvexFit::from_fitted(&ds, y.to_vec(), &cfg()).unwrap();
        let g = g_process(&ds, &fit).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert_eq!(tent_functional(&ds, &fit, 0.1, 0.7).unwrap(), 0.0);
        let seg = segment_reports(&ds, &fit).unwrap();
        assert!(seg.segments.iter().all(|s| s.t1 == 0.0 && s.t2 == 0.0));
    }

    #[test]
    fn affine_segment_has_zero_gap() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let ds = Dataset::from_xy(&x, &y).unwrap();
        let (fit, _) = fit_convex_lse(&ds, &cfg()).unwrap();
        let seg = segment_reports(&ds, &fit).unwrap();
        assert_eq!(seg.segments.len(), 1);
        let s = &seg.segments[0];
        assert!(s.t1.abs() < 1e-12 && s.t2.abs() < 1e-12 && s.sup_gap < 1e-12);
        assert!((s.ols_slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn solver_output_passes_every_condition() {
        let ds = wavy();
        let (fit, _) = fit_convex_lse(&ds, &cfg()).unwrap();
        assert!(!fit.kinks().is_empty());
        let report = characterization_report(&ds, &fit, &cfg()).unwrap();
        assert!(report.passed, "{report:?}");
        let g = g_process(&ds, &fit).unwrap();
        assert!(g.flags(&ds, &cfg()).is_clean());
        for (i, &t) in ds.x().iter().enumerate() {
            assert!((g_value(&ds, &fit, t).unwrap() - g.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_fit_trips_g_detector() {
        let ds = wavy();
        let (fit, _) = fit_convex_lse(&ds, &cfg()).unwrap();
        let mut f = fit.fitted().to_vec();
        f[10] -= 0.05;
        let bad = ConvexFit::from_fitted(&ds, f, &cfg()).unwrap();
        let g = g_process(&ds, &bad).unwrap();
        assert!(!g.flags(&ds, &cfg()).positive_points.is_empty());
    }

    #[test]
    fn affine_shift_leaves_residual_checks_unchanged() {
        let ds = wavy();
        let (fit, _) = fit_convex_lse(&ds, &cfg()).unwrap();
        let (a, b) = (0.7, -1.3);
        let shifted_y: Vec<f64> = ds.y().iter().zip(ds.x()).map(|(y, x)| y + a + b * x).collect();
        let shifted_f: Vec<f64> = fit.fitted().iter().zip(ds.x()).map(|(f, x)| f + a + b * x).collect();
        let ds2 = ds.with_responses(shifted_y).unwrap();
        let fit2 = ConvexFit::from_knots(&ds2, shifted_f, fit.kinks().to_vec()).unwrap();
        let r1 = characterization_report(&ds, &fit, &cfg()).unwrap();
        let r2 = characterization_report(&ds2, &fit2, &cfg()).unwrap();
        assert_eq!(r1.passed, r2.passed);
        for (c1, c2) in r1.conditions.iter().zip(&r2.conditions) {
            assert_eq!(c1.passed, c2.passed, "{}", c1.name);
        }
        let g1 = g_process(&ds, &fit).unwrap();
        let g2 = g_process(&ds2, &fit2).unwrap();
        for (u, v) in g1.values.iter().zip(&g2.values) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn tent_rejects_bad_interval() {
        let ds = wavy();
        let (fit, _) = fit_convex_lse(&ds, &cfg()).unwrap();
        assert!(tent_functional(&ds, &fit, 0.5, 0.5).is_err());
        assert!(tent_functional(&ds, &fit, 0.6, 0.2).is_err());
    }
}

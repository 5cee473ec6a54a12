//! Convex least-squares solver.
//!
//! The estimator is the projection of the response vector onto the cone of
//! vectors with nondecreasing divided differences. It is computed by an
//! active-set iteration over kink sets: the current kink set defines an
//! unconstrained hinge regression, the cumulative-sum optimality conditions
//! pick the next kink, and kinks whose hinge coefficient would turn
//! nonpositive are removed with a feasibility-preserving step. The final fit
//! is certified by the same cumulative-sum conditions.

mod knot_lsq;

use serde::Serialize;

use crate::error::{ModelError, SolverError};
use crate::model::{ConvexFit, Dataset, ToleranceConfig};

/// Cumulative-sum certificate of optimality.
///
/// `cum[m]` is `sum_{k <= m} (R_k - S_k)(x_{k+1} - x_k)` (0-based), where
/// `R_k` and `S_k` are weighted partial sums of fitted values and responses.
/// An optimal fit has every entry `>= 0`, equality at every kink and at the
/// last entry, and `total_gap == 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KktSums {
    pub cum: Vec<f64>,
    pub total_gap: f64,
}

impl KktSums {
    /// Entry associated with design index `j` (`1 <= j < n`).
    pub fn at_index(&self, j: usize) -> f64 {
        self.cum[j - 1]
    }

    pub fn min(&self) -> f64 {
        self.cum.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Iteration record of one solver run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverTrace {
    /// Number of knot least-squares solves.
    pub iterations: usize,
    /// Kink set after each accepted pivot.
    pub kink_history: Vec<Vec<usize>>,
    pub final_objective: f64,
    pub certificate: KktSums,
    /// Solves that fell back to the QR path.
    pub qr_fallbacks: usize,
    pub max_condition_estimate: f64,
}

/// Partial sums of the optimality characterization for any `(dataset, fitted)`.
pub(crate) fn cumulative_sums(ds: &Dataset, fitted: &[f64]) -> KktSums {
    let (x, y, w) = (ds.x(), ds.y(), ds.weights());
    let n = x.len();
    let mut cum = Vec::with_capacity(n - 1);
    let mut gap = 0.0;
    let mut acc = 0.0;
    for k in 0..n {
        gap += w[k] * (fitted[k] - y[k]);
        if k + 1 < n {
            acc += gap * (x[k + 1] - x[k]);
            cum.push(acc);
        }
    }
    KktSums {
        cum,
        total_gap: gap,
    }
}

/// Exact cumulative sums for a fit.
pub fn kkt_sums(dataset: &Dataset, fit: &ConvexFit) -> Result<KktSums, ModelError> {
    fit.check_len(dataset)?;
    Ok(cumulative_sums(dataset, fit.fitted()))
}

struct Solver<'a> {
    ds: &'a Dataset,
    trace: SolverTrace,
    cap: usize,
}

impl Solver<'_> {
    fn solve(&mut self, knots: &[usize]) -> Result<Vec<f64>, SolverError> {
        if self.trace.iterations >= self.cap {
            return Err(SolverError::NonConvergence {
                max_iterations: self.cap,
                trace: Box::new(std::mem::take(&mut self.trace)),
            });
        }
        self.trace.iterations += 1;
        let sol = knot_lsq::solve(self.ds.x(), self.ds.y(), self.ds.weights(), knots)?;
        if sol.used_qr {
            self.trace.qr_fallbacks += 1;
        }
        if sol.condition_estimate.is_finite() {
            self.trace.max_condition_estimate =
                self.trace.max_condition_estimate.max(sol.condition_estimate);
        }
        Ok(sol.values)
    }
}

fn with_ends(active: &[usize], n: usize) -> Vec<usize> {
    let mut knots = Vec::with_capacity(active.len() + 2);
    knots.push(0);
    knots.extend_from_slice(active);
    knots.push(n - 1);
    knots
}

/// Computes the convex least-squares estimator and certifies it.
pub fn fit_convex_lse(
    dataset: &Dataset,
    config: &ToleranceConfig,
) -> Result<(ConvexFit, SolverTrace), SolverError> {
    config.validate()?;
    let n = dataset.len();
    let x = dataset.x();
    let mut solver = Solver {
        ds: dataset,
        trace: SolverTrace::default(),
        cap: config.iteration_cap(n),
    };

    if n == 2 {
        let fit = ConvexFit::from_knots(dataset, dataset.y().to_vec(), Vec::new())?;
        return finish(dataset, config, fit, solver.trace);
    }

    let norm = dataset.total_weight() * dataset.scale();
    // Pivot until violations are at rounding level; certification uses kkt_tol.
    let pivot_tol = config.kkt_tol * 1e-5 * norm;
    let tie_tol = 1e-12 * norm;

    let mut active: Vec<usize> = Vec::new();
    let mut values = solver.solve(&[0, n - 1])?;
    let mut fitted = knot_lsq::interpolate(x, &[0, n - 1], &values);
    let mut in_active = vec![false; n];
    let mut blocked = vec![false; n];

    loop {
        let sums = cumulative_sums(dataset, &fitted);
        let mut best: Option<(usize, f64)> = None;
        for j in 1..n - 1 {
            if in_active[j] || blocked[j] {
                continue;
            }
            let c = sums.cum[j - 1];
            if c >= -pivot_tol {
                continue;
            }
            match best {
                Some((_, bc)) if c >= bc - tie_tol => {}
                _ => best = Some((j, c)),
            }
        }
        let Some((added, _)) = best else { break };

        let mut trial = active.clone();
        let pos = trial.partition_point(|&k| k < added);
        trial.insert(pos, added);
        let mut cur: Vec<f64> = with_ends(&trial, n).iter().map(|&k| fitted[k]).collect();
        let mut fresh = added;

        let progressed = loop {
            let knots = with_ends(&trial, n);
            let z = solver.solve(&knots)?;
            let bz = knot_lsq::slope_changes(x, &knots, &z);
            if bz.iter().all(|&b| b > 0.0) {
                active = trial;
                values = z;
                break true;
            }
            let mut bc = knot_lsq::slope_changes(x, &knots, &cur);
            for (q, &k) in trial.iter().enumerate() {
                if k == fresh || bc[q] < 0.0 {
                    bc[q] = 0.0;
                }
            }
            // Step towards z until the first coefficient reaches zero.
            let mut alpha = 1.0_f64;
            for q in 0..trial.len() {
                if bz[q] <= 0.0 {
                    alpha = alpha.min(bc[q] / (bc[q] - bz[q]));
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (c, zv) in cur.iter_mut().zip(&z) {
                *c += alpha * (zv - *c);
            }
            let stepped = knot_lsq::slope_changes(x, &knots, &cur);
            let before = trial.len();
            let mut keep_trial = Vec::with_capacity(before);
            let mut keep_cur = vec![cur[0]];
            for q in 0..before {
                let hit = bz[q] <= 0.0 && (stepped[q] <= 0.0 || bc[q] / (bc[q] - bz[q]) <= alpha);
                if !hit {
                    keep_trial.push(trial[q]);
                    keep_cur.push(cur[q + 1]);
                }
            }
            keep_cur.push(cur[before + 1]);
            let dropped_fresh = !keep_trial.contains(&fresh);
            if dropped_fresh && alpha == 0.0 && keep_trial.len() + 1 == before {
                // The new kink cannot enter at rounding level.
                blocked[added] = true;
                break false;
            }
            if dropped_fresh {
                fresh = usize::MAX;
            }
            trial = keep_trial;
            cur = keep_cur;
        };

        if progressed {
            in_active.iter_mut().for_each(|v| *v = false);
            for &k in &active {
                in_active[k] = true;
            }
            blocked.iter_mut().for_each(|v| *v = false);
            let knots = with_ends(&active, n);
            fitted = knot_lsq::interpolate(x, &knots, &values);
            solver.trace.kink_history.push(active.clone());
        }
    }

    let fit = ConvexFit::from_knots(dataset, fitted, active)?;
    finish(dataset, config, fit, solver.trace)
}

fn finish(
    ds: &Dataset,
    config: &ToleranceConfig,
    fit: ConvexFit,
    mut trace: SolverTrace,
) -> Result<(ConvexFit, SolverTrace), SolverError> {
    let sums = cumulative_sums(ds, fit.fitted());
    trace.final_objective = fit.objective(ds);
    let norm = ds.total_weight() * ds.scale();
    let tol = config.kkt_tol * norm;
    let mut reasons = Vec::new();
    if fit.cone_violation(ds) > config.kkt_tol * ds.scale() {
        reasons.push("fitted values leave the convex cone".to_string());
    }
    if sums.total_gap.abs() > tol {
        reasons.push(format!("total gap {:e}", sums.total_gap / norm));
    }
    if let Some(last) = sums.cum.last() {
        if last.abs() > tol {
            reasons.push(format!("last cumulative sum {:e}", last / norm));
        }
    }
    let min = sums.min();
    if min < -tol {
        reasons.push(format!("cumulative sum {:e} below zero", min / norm));
    }
    for &k in fit.kinks() {
        if sums.at_index(k).abs() > tol {
            reasons.push(format!("kink {k} cumulative sum {:e}", sums.at_index(k) / norm));
        }
    }
    trace.certificate = sums;
    if reasons.is_empty() {
        Ok((fit, trace))
    } else {
        Err(SolverError::CertificationFailed {
            reason: reasons.join("; "),
            trace: Box::new(trace),
        })
    }
}

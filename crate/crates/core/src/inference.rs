//! Estimators read off a fitted convex function: location of the minimum,
//! boundary values, local values and the asymptotic scaling constants.

use serde::Serialize;

use crate::error::ModelError;
use crate::model::{evaluate, left_derivative, ConvexFit, Dataset};

/// Fitted values within this absolute distance of the minimum count as ties.
pub const ARGMIN_TIE_TOL: f64 = 1e-12;

/// Number of grid points used by [`local_estimates`].
pub const LOCAL_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgminResult {
    /// Smallest design point attaining the minimum fitted value.
    pub location: f64,
    pub value: f64,
    pub tie_count: usize,
    pub index: usize,
}

/// Location of the minimum of the fit; ties go to the smallest design point.
pub fn argmin_estimator(fit: &ConvexFit, dataset: &Dataset) -> ArgminResult {
    let f = fit.fitted();
    let value = f.iter().copied().fold(f64::INFINITY, f64::min);
    let index = f
        .iter()
        .position(|&v| v - value <= ARGMIN_TIE_TOL)
        .unwrap_or(0);
    let tie_count = f.iter().filter(|&&v| v - value <= ARGMIN_TIE_TOL).count();
    ArgminResult {
        location: dataset.x()[index],
        value,
        tie_count,
        index,
    }
}

/// Values and slopes of the fit continued linearly to 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDiagnostics {
    pub value_at_0: f64,
    pub deriv_at_0: f64,
    pub value_at_1: f64,
    pub deriv_at_1: f64,
}

pub fn boundary_diagnostics(fit: &ConvexFit, dataset: &Dataset) -> BoundaryDiagnostics {
    let x = dataset.x();
    let f = fit.fitted();
    let n = x.len();
    let slopes = fit.segment_slopes();
    let (s0, s1) = (slopes[0], slopes[slopes.len() - 1]);
    BoundaryDiagnostics {
        value_at_0: f[0] - s0 * x[0],
        deriv_at_0: s0,
        value_at_1: f[n - 1] + s1 * (1.0 - x[n - 1]),
        deriv_at_1: s1,
    }
}

/// Local scale constants `(d1, d2)` for the pointwise value and derivative
/// limits when the first nonvanishing derivative at `x0` has even order `r`.
///
/// `d1 = ((r+2)! / (sigma^(2r+2) mu_r))^(1/(2r+1))` and
/// `d2 = (((r+2)!)^3 / (sigma^(2r) mu_r^3))^(1/(2r+1))`, evaluated in log
/// space.
pub fn scaling_constants(r: u32, sigma: f64, mu_r_at_x0: f64) -> Result<(f64, f64), ModelError> {
    if r < 2 || r % 2 != 0 {
        return Err(ModelError::InvalidArgument(format!(
            "order r must be an even integer >= 2, got {r}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ModelError::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(mu_r_at_x0 > 0.0 && mu_r_at_x0.is_finite()) {
        return Err(ModelError::InvalidArgument(format!(
            "derivative of order r must be positive, got {mu_r_at_x0}"
        )));
    }
    let rf = r as f64;
    let ln_fact: f64 = (2..=r + 2).map(|k| (k as f64).ln()).sum();
    let (ln_s, ln_mu) = (sigma.ln(), mu_r_at_x0.ln());
    let d1 = ((ln_fact - (2.0 * rf + 2.0) * ln_s - ln_mu) / (2.0 * rf + 1.0)).exp();
    let d2 = ((3.0 * ln_fact - 2.0 * rf * ln_s - 3.0 * ln_mu) / (2.0 * rf + 1.0)).exp();
    Ok((d1, d2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalEstimates {
    pub value: f64,
    pub left_derivative: f64,
    /// `max |fit - reference|` over the window grid; present only with a
    /// reference function.
    pub sup_deviation: Option<f64>,
}

/// Value and left derivative at `x0`, plus the sup deviation from
/// `reference` over a uniform grid on `[x0 - halfwidth, x0 + halfwidth]`.
pub fn local_estimates(
    fit: &ConvexFit,
    dataset: &Dataset,
    x0: f64,
    halfwidth: f64,
    reference: Option<&dyn Fn(f64) -> f64>,
) -> Result<LocalEstimates, ModelError> {
    let (lo, hi) = (x0 - halfwidth, x0 + halfwidth);
    if !(halfwidth >= 0.0) || !(lo >= 0.0 && hi <= 1.0) {
        return Err(ModelError::InvalidArgument(format!(
            "window [{lo}, {hi}] is not inside [0, 1]"
        )));
    }
    let value = evaluate(fit, dataset, x0)?;
    let left = left_derivative(fit, dataset, x0)?;
    let sup_deviation = match reference {
        None => None,
        Some(g) => {
            let mut sup = 0.0_f64;
            for k in 0..LOCAL_GRID_POINTS {
                let t = lo + (hi - lo) * k as f64 / (LOCAL_GRID_POINTS - 1) as f64;
                let t = t.clamp(lo, hi);
                sup = sup.max((evaluate(fit, dataset, t)? - g(t)).abs());
            }
            Some(sup)
        }
    };
    Ok(LocalEstimates {
        value,
        left_derivative: left,
        sup_deviation,
    })
}

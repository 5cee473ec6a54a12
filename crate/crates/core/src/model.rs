//! Designs, fits, and the evaluation/extrapolation rules every other module
//! builds on.
//!
//! A [`Dataset`] is an ordered design `x_1 < ... < x_n` in `[0, 1]` with
//! responses and multiplicity weights. A [`ConvexFit`] holds fitted values at
//! the design points together with its kink set; between design points the
//! fit is the linear interpolant and outside `[x_1, x_n]` it continues the
//! first/last segment linearly.

use serde::Serialize;

use crate::error::ModelError;

/// Ordered design with concomitant responses.
///
/// Duplicate design points are merged into one point whose response is the
/// mean of the duplicates and whose weight is their count. The weighted
/// least-squares problem on the merged data has the same minimiser as the
/// original one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    weights: Vec<f64>,
}

impl Dataset {
    /// Sorts, validates and merges duplicate design points.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, ModelError> {
        for (index, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::NonFinite { index });
            }
            if !(0.0..=1.0).contains(&x) {
                return Err(ModelError::OutOfDomain { index, value: x });
            }
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut x: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut y: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut weights: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut start = 0;
        while start < sorted.len() {
            let xv = sorted[start].0;
            let mut end = start;
            let mut sum = 0.0;
            while end < sorted.len() && sorted[end].0 == xv {
                sum += sorted[end].1;
                end += 1;
            }
            let count = (end - start) as f64;
            x.push(xv);
            y.push(sum / count);
            weights.push(count);
            start = end;
        }
        if x.len() < 2 {
            return Err(ModelError::TooFewPoints(x.len()));
        }
        Ok(Self { x, y, weights })
    }

    /// Convenience wrapper over [`Dataset::from_points`] for parallel slices.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self, ModelError> {
        if x.len() != y.len() {
            return Err(ModelError::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let points: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        Self::from_points(&points)
    }

    /// Same design and weights with new responses.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self, ModelError> {
        if y.len() != self.len() {
            return Err(ModelError::LengthMismatch {
                expected: self.len(),
                got: y.len(),
            });
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        Ok(Self {
            x: self.x.clone(),
            y,
            weights: self.weights.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of original observations (sum of merge weights).
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `1 + max|y|`, the scale every tolerance is normalised by.
    pub fn scale(&self) -> f64 {
        1.0 + self.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Builds a [`Dataset`] from unordered `(x, y)` pairs.
pub fn build_dataset(points: &[(f64, f64)]) -> Result<Dataset, ModelError> {
    Dataset::from_points(points)
}

/// Numerical tolerances. All are relative to [`Dataset::scale`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceConfig {
    /// Tolerance on characterization residuals (cumulative sums are
    /// additionally divided by the number of observations).
    pub kkt_tol: f64,
    /// Minimum slope change recognised as a kink in raw fitted values.
    pub kink_tol: f64,
    /// Cap on linear solves in the active-set loop; `None` means `50 n`.
    pub max_iterations: Option<usize>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-8,
            kink_tol: 1e-7,
            max_iterations: None,
        }
    }
}

impl ToleranceConfig {
    pub fn with_kkt_tol(mut self, tol: f64) -> Self {
        self.kkt_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.kkt_tol > 0.0 && self.kkt_tol.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if !(self.kink_tol > 0.0 && self.kink_tol.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "kink_tol must be positive, got {}",
                self.kink_tol
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(ModelError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(50 * n.max(1))
    }
}

/// One hinge `coeff * (x - location)_+` anchored at design index `index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hinge {
    pub index: usize,
    pub location: f64,
    pub coeff: f64,
}

/// `intercept + base_slope * x + sum_j coeff_j (x - x_{m_j})_+`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HingeRepresentation {
    pub intercept: f64,
    pub base_slope: f64,
    pub hinges: Vec<Hinge>,
}

impl HingeRepresentation {
    pub fn eval(&self, x: f64) -> f64 {
        self.hinges
            .iter()
            .fold(self.intercept + self.base_slope * x, |acc, h| {
                acc + h.coeff * (x - h.location).max(0.0)
            })
    }
}

/// Fitted values at the design points plus their piecewise-linear structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexFit {
    fitted: Vec<f64>,
    kinks: Vec<usize>,
    intercept: f64,
    base_slope: f64,
    hinge_coeffs: Vec<(usize, f64)>,
    #[serde(skip)]
    knot_slopes: Vec<f64>,
}

impl ConvexFit {
    /// Builds a fit whose kink set is known exactly (interior design indices,
    /// strictly increasing).
    pub fn from_knots(
        dataset: &Dataset,
        fitted: Vec<f64>,
        kinks: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let n = dataset.len();
        if fitted.len() != n {
            return Err(ModelError::LengthMismatch {
                expected: n,
                got: fitted.len(),
            });
        }
        if let Some(index) = fitted.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        let sorted = kinks.windows(2).all(|w| w[0] < w[1]);
        let interior = kinks.iter().all(|&k| k > 0 && k + 1 < n);
        if !sorted || !interior {
            return Err(ModelError::InvalidArgument(
                "kinks must be strictly increasing interior design indices".into(),
            ));
        }
        let x = dataset.x();
        let mut knots = Vec::with_capacity(kinks.len() + 2);
        knots.push(0);
        knots.extend_from_slice(&kinks);
        knots.push(n - 1);
        let knot_slopes: Vec<f64> = knots
            .windows(2)
            .map(|w| (fitted[w[1]] - fitted[w[0]]) / (x[w[1]] - x[w[0]]))
            .collect();
        let base_slope = knot_slopes[0];
        let intercept = fitted[0] - base_slope * x[0];
        let hinge_coeffs = kinks
            .iter()
            .enumerate()
            .map(|(j, &k)| (k, knot_slopes[j + 1] - knot_slopes[j]))
            .collect();
        Ok(Self {
            fitted,
            kinks,
            intercept,
            base_slope,
            hinge_coeffs,
            knot_slopes,
        })
    }

    /// Wraps raw fitted values, detecting kinks as slope increases above
    /// `kink_tol * scale`. Slope changes below the rounding floor of the
    /// adjacent spacings are ignored.
    pub fn from_fitted(
        dataset: &Dataset,
        fitted: Vec<f64>,
        config: &ToleranceConfig,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        if fitted.len() != dataset.len() {
            return Err(ModelError::LengthMismatch {
                expected: dataset.len(),
                got: fitted.len(),
            });
        }
        let kinks = detect_kinks(dataset, &fitted, config.kink_tol);
        Self::from_knots(dataset, fitted, kinks)
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    /// Design indices where the slope strictly increases.
    pub fn kinks(&self) -> &[usize] {
        &self.kinks
    }

    pub fn len(&self) -> usize {
        self.fitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitted.is_empty()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn base_slope(&self) -> f64 {
        self.base_slope
    }

    pub fn hinge_coeffs(&self) -> &[(usize, f64)] {
        &self.hinge_coeffs
    }

    /// `[0, kinks..., n-1]`.
    pub fn knots(&self) -> Vec<usize> {
        let mut knots = Vec::with_capacity(self.kinks.len() + 2);
        knots.push(0);
        knots.extend_from_slice(&self.kinks);
        knots.push(self.fitted.len() - 1);
        knots
    }

    /// Slope of each affine piece, left to right.
    pub fn segment_slopes(&self) -> &[f64] {
        &self.knot_slopes
    }

    /// Slope of the affine piece containing the design pair `(i, i + 1)`.
    pub fn pair_slope(&self, i: usize) -> f64 {
        let seg = self.kinks.partition_point(|&k| k <= i);
        self.knot_slopes[seg]
    }

    /// Weighted residual sum of squares.
    pub fn objective(&self, dataset: &Dataset) -> f64 {
        dataset
            .y()
            .iter()
            .zip(&self.fitted)
            .zip(dataset.weights())
            .map(|((y, f), w)| w * (y - f) * (y - f))
            .sum()
    }

    /// `y_i - fitted_i`.
    pub fn residuals(&self, dataset: &Dataset) -> Vec<f64> {
        dataset
            .y()
            .iter()
            .zip(&self.fitted)
            .map(|(y, f)| y - f)
            .collect()
    }

    /// Largest amount by which a fitted value lies above the chord of its two
    /// neighbours; zero iff the fitted vector is in the convex cone.
    pub fn cone_violation(&self, dataset: &Dataset) -> f64 {
        cone_violation(dataset.x(), &self.fitted)
    }

    pub(crate) fn check_len(&self, dataset: &Dataset) -> Result<(), ModelError> {
        if self.fitted.len() != dataset.len() {
            return Err(ModelError::LengthMismatch {
                expected: dataset.len(),
                got: self.fitted.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn cone_violation(x: &[f64], f: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for j in 1..f.len().saturating_sub(1) {
        let (dl, dr) = (x[j] - x[j - 1], x[j + 1] - x[j]);
        let chord = (f[j - 1] * dr + f[j + 1] * dl) / (dl + dr);
        worst = worst.max(f[j] - chord);
    }
    worst
}

fn detect_kinks(dataset: &Dataset, fitted: &[f64], kink_tol: f64) -> Vec<usize> {
    let x = dataset.x();
    let n = x.len();
    let threshold = kink_tol * dataset.scale();
    let fscale = 1.0 + fitted.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut kinks = Vec::new();
    for j in 1..n.saturating_sub(1) {
        let (dl, dr) = (x[j] - x[j - 1], x[j + 1] - x[j]);
        let sl = (fitted[j] - fitted[j - 1]) / dl;
        let sr = (fitted[j + 1] - fitted[j]) / dr;
        let floor = 16.0 * f64::EPSILON * fscale * (1.0 / dl + 1.0 / dr);
        if sr - sl > threshold + floor {
            kinks.push(j);
        }
    }
    kinks
}

fn check_query(t: f64) -> Result<(), ModelError> {
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(ModelError::QueryOutOfDomain(t));
    }
    Ok(())
}

/// Value of the fit at `t`: linear interpolation inside `[x_1, x_n]`, linear
/// continuation of the boundary pieces outside it.
pub fn evaluate(fit: &ConvexFit, dataset: &Dataset, t: f64) -> Result<f64, ModelError> {
    check_query(t)?;
    fit.check_len(dataset)?;
    let (x, f) = (dataset.x(), fit.fitted());
    let n = x.len();
    if t < x[0] {
        return Ok(f[0] + fit.knot_slopes[0] * (t - x[0]));
    }
    if t > x[n - 1] {
        return Ok(f[n - 1] + fit.knot_slopes[fit.knot_slopes.len() - 1] * (t - x[n - 1]));
    }
    let i = (x.partition_point(|&v| v <= t) - 1).min(n - 2);
    if t == x[i] {
        return Ok(f[i]);
    }
    let lambda = (t - x[i]) / (x[i + 1] - x[i]);
    Ok(f[i] + (f[i + 1] - f[i]) * lambda)
}

/// Left derivative `fit'(t-)`; at or before `x_1` this is the slope of the
/// first piece.
pub fn left_derivative(fit: &ConvexFit, dataset: &Dataset, t: f64) -> Result<f64, ModelError> {
    check_query(t)?;
    fit.check_len(dataset)?;
    let x = dataset.x();
    let n = x.len();
    if t <= x[0] {
        return Ok(fit.knot_slopes[0]);
    }
    if t > x[n - 1] {
        return Ok(fit.knot_slopes[fit.knot_slopes.len() - 1]);
    }
    // x[i] < t <= x[i + 1]
    let i = x.partition_point(|&v| v < t) - 1;
    Ok(fit.pair_slope(i))
}

/// Intercept, base slope and positive hinge coefficients of the fit.
pub fn hinge_representation(fit: &ConvexFit, dataset: &Dataset) -> HingeRepresentation {
    let x = dataset.x();
    HingeRepresentation {
        intercept: fit.intercept,
        base_slope: fit.base_slope,
        hinges: fit
            .hinge_coeffs
            .iter()
            .map(|&(index, coeff)| Hinge {
                index,
                location: x[index],
                coeff,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point() -> (Dataset, ConvexFit) {
        let ds = Dataset::from_xy(&[0.25, 0.5, 0.75], &[1.0, 0.0, 1.0]).unwrap();
        let fit = ConvexFit::from_fitted(&ds, vec![1.0, 0.0, 1.0], &ToleranceConfig::default())
            .unwrap();
        (ds, fit)
    }

    #[test]
    fn build_sorts() {
        let ds = build_dataset(&[(0.2, 1.0), (0.1, 0.0), (0.3, 2.0)]).unwrap();
        assert_eq!(ds.x(), &[0.1, 0.2, 0.3]);
        assert_eq!(ds.y(), &[0.0, 1.0, 2.0]);
        assert_eq!(ds.weights(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn build_merges_duplicates() {
        let ds = build_dataset(&[(0.1, 0.0), (0.2, 4.0), (0.2, 6.0), (0.4, 1.0)]).unwrap();
        assert_eq!(ds.x(), &[0.1, 0.2, 0.4]);
        assert_eq!(ds.y(), &[0.0, 5.0, 1.0]);
        assert_eq!(ds.weights(), &[1.0, 2.0, 1.0]);
        assert_eq!(ds.total_weight(), 4.0);
    }

    #[test]
    fn build_rejects_degenerate_inputs() {
        assert_eq!(
            build_dataset(&[(0.5, 1.0), (0.5, 3.0)]),
            Err(ModelError::TooFewPoints(1))
        );
        assert!(matches!(
            build_dataset(&[(0.5, 1.0), (1.5, 3.0)]),
            Err(ModelError::OutOfDomain { index: 1, .. })
        ));
        assert!(matches!(
            build_dataset(&[(0.5, f64::NAN), (0.7, 3.0)]),
            Err(ModelError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn evaluate_line_and_extrapolation() {
        let x = [0.1, 0.3, 0.6, 0.9];
        let ds = Dataset::from_xy(&x, &x).unwrap();
        let fit = ConvexFit::from_fitted(&ds, x.to_vec(), &ToleranceConfig::default()).unwrap();
        assert!((evaluate(&fit, &ds, 0.37).unwrap() - 0.37).abs() < 1e-15);
        for t in [0.0, 0.05, 0.5, 0.95, 1.0] {
            assert!((left_derivative(&fit, &ds, t).unwrap() - 1.0).abs() < 1e-12);
        }

        let (ds, fit) = three_point();
        assert_eq!(evaluate(&fit, &ds, 0.0).unwrap(), 2.0);
        assert_eq!(evaluate(&fit, &ds, 1.0).unwrap(), 2.0);
        assert_eq!(left_derivative(&fit, &ds, 0.5).unwrap(), -4.0);
        assert_eq!(left_derivative(&fit, &ds, 0.6).unwrap(), 4.0);
        assert!(matches!(
            evaluate(&fit, &ds, 1.2),
            Err(ModelError::QueryOutOfDomain(_))
        ));
        assert!(left_derivative(&fit, &ds, -0.1).is_err());
    }

    #[test]
    fn evaluate_rejects_mismatched_fit() {
        let (_, fit) = three_point();
        let other = Dataset::from_xy(&[0.1, 0.2], &[0.0, 0.0]).unwrap();
        assert!(matches!(
            evaluate(&fit, &other, 0.5),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn hinge_of_three_points() {
        let (ds, fit) = three_point();
        assert_eq!(fit.kinks(), &[1]);
        let rep = hinge_representation(&fit, &ds);
        assert_eq!(rep.intercept, 2.0);
        assert_eq!(rep.base_slope, -4.0);
        assert_eq!(rep.hinges.len(), 1);
        assert_eq!(rep.hinges[0].location, 0.5);
        assert_eq!(rep.hinges[0].coeff, 8.0);
    }

    #[test]
    fn hinge_of_a_line() {
        let x = [0.0, 0.2, 0.7, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let ds = Dataset::from_xy(&x, &y).unwrap();
        let fit = ConvexFit::from_fitted(&ds, y, &ToleranceConfig::default()).unwrap();
        let rep = hinge_representation(&fit, &ds);
        assert!((rep.intercept - 1.0).abs() < 1e-15);
        assert!((rep.base_slope - 2.0).abs() < 1e-14);
        assert!(rep.hinges.is_empty());
    }

    #[test]
    fn sub_threshold_slope_changes_are_not_kinks() {
        let x = [0.0, 0.5, 1.0];
        let ds = Dataset::from_xy(&x, &[0.0, 0.0, 0.0]).unwrap();
        let fit = ConvexFit::from_fitted(&ds, vec![0.0, 0.0, 1e-9], &ToleranceConfig::default())
            .unwrap();
        assert!(fit.kinks().is_empty());
        let fit = ConvexFit::from_fitted(&ds, vec![0.0, 0.0, 1e-3], &ToleranceConfig::default())
            .unwrap();
        assert_eq!(fit.kinks(), &[1]);
    }

    #[test]
    fn cone_violation_detects_concavity() {
        let ds = Dataset::from_xy(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        let fit = ConvexFit::from_fitted(&ds, vec![0.0, 1.0, 0.0], &ToleranceConfig::default())
            .unwrap();
        assert_eq!(fit.cone_violation(&ds), 1.0);
        let (ds, fit) = three_point();
        assert_eq!(fit.cone_violation(&ds), 0.0);
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        assert!(ToleranceConfig::default().with_kkt_tol(0.0).validate().is_err());
        let cfg = ToleranceConfig {
            max_iterations: Some(0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(ToleranceConfig::default().iteration_cap(10), 500);
    }
}

//! Unconstrained weighted least squares over continuous piecewise-linear
//! functions with a fixed knot set.
//!
//! The span of `{1, x, (x - x_{m_j})_+}` equals the span of the hat functions
//! centred at the knots, so the fit is parameterised by its values at the
//! knots. Each design point touches at most two adjacent hats, which makes the
//! Gram matrix tridiagonal and the design matrix banded.

use crate::error::SolverError;

const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub(crate) struct KnotSolve {
    /// Fitted values at the knots.
    pub values: Vec<f64>,
    pub condition_estimate: f64,
    pub used_qr: bool,
}

/// Interpolation weight of design point `i` towards the right knot of its
/// segment, and the segment index.
fn rows<'a>(x: &'a [f64], knots: &'a [usize]) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
    let last = *knots.last().expect("at least two knots");
    knots
        .windows(2)
        .enumerate()
        .flat_map(move |(seg, w)| {
            let (a, b) = (w[0], w[1]);
            let (xa, span) = (x[a], x[b] - x[a]);
            (a..b).map(move |i| (i, seg, (x[i] - xa) / span))
        })
        .chain(std::iter::once((last, knots.len() - 2, 1.0)))
}

pub(crate) fn solve(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    knots: &[usize],
) -> Result<KnotSolve, SolverError> {
    let p = knots.len();
    let mut diag = vec![0.0; p];
    let mut off = vec![0.0; p - 1];
    let mut rhs = vec![0.0; p];
    for (i, seg, lam) in rows(x, knots) {
        let (a, b) = (1.0 - lam, lam);
        diag[seg] += w[i] * a * a;
        diag[seg + 1] += w[i] * b * b;
        off[seg] += w[i] * a * b;
        rhs[seg] += w[i] * a * y[i];
        rhs[seg + 1] += w[i] * b * y[i];
    }

    // LDL^T of the tridiagonal Gram matrix.
    let mut d = vec![0.0; p];
    let mut m = vec![0.0; p - 1];
    d[0] = diag[0];
    let mut ok = d[0] > 0.0;
    for l in 0..p - 1 {
        if !ok {
            break;
        }
        m[l] = off[l] / d[l];
        d[l + 1] = diag[l + 1] - m[l] * off[l];
        ok = d[l + 1] > 0.0 && d[l + 1].is_finite();
    }
    // Gershgorin bound on the largest eigenvalue over the smallest pivot.
    let gersh = (0..p)
        .map(|l| {
            let left = if l > 0 { off[l - 1].abs() } else { 0.0 };
            let right = if l + 1 < p { off[l].abs() } else { 0.0 };
            diag[l] + left + right
        })
        .fold(0.0_f64, f64::max);
    let min_pivot = d.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_estimate = if ok { gersh / min_pivot } else { f64::INFINITY };

    if ok && condition_estimate <= CONDITION_LIMIT {
        let mut z = rhs;
        for l in 0..p - 1 {
            z[l + 1] -= m[l] * z[l];
        }
        let mut v = vec![0.0; p];
        v[p - 1] = z[p - 1] / d[p - 1];
        for l in (0..p - 1).rev() {
            v[l] = z[l] / d[l] - m[l] * v[l + 1];
        }
        return Ok(KnotSolve {
            values: v,
            condition_estimate,
            used_qr: false,
        });
    }
    solve_qr(x, y, w, knots, condition_estimate)
}

/// Givens QR of the banded design matrix. Rows arrive in knot order, so the
/// rotation of a row never fills in beyond the superdiagonal.
fn solve_qr(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    knots: &[usize],
    condition_estimate: f64,
) -> Result<KnotSolve, SolverError> {
    let p = knots.len();
    let mut r_diag = vec![0.0_f64; p];
    let mut r_sup = vec![0.0; p];
    let mut qty = vec![0.0; p];
    for (i, seg, lam) in rows(x, knots) {
        let sw = w[i].sqrt();
        let mut a = (1.0 - lam) * sw;
        let mut b = lam * sw;
        let mut t = y[i] * sw;
        let mut col = seg;
        // Entry `a` sits in column `col`, `b` in `col + 1`.
        loop {
            if a != 0.0 {
                let h = r_diag[col].hypot(a);
                let (c, s) = (r_diag[col] / h, a / h);
                r_diag[col] = h;
                let sup = r_sup[col];
                r_sup[col] = c * sup + s * b;
                b = -s * sup + c * b;
                let q = qty[col];
                qty[col] = c * q + s * t;
                t = -s * q + c * t;
            }
            if col + 1 >= p || b == 0.0 {
                break;
            }
            col += 1;
            a = b;
            b = 0.0;
        }
    }
    let scale = r_diag.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let smallest = r_diag.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(smallest > scale * 1e-14) {
        return Err(SolverError::Singular {
            condition: condition_estimate,
        });
    }
    let mut v = vec![0.0; p];
    v[p - 1] = qty[p - 1] / r_diag[p - 1];
    for l in (0..p - 1).rev() {
        v[l] = (qty[l] - r_sup[l] * v[l + 1]) / r_diag[l];
    }
    Ok(KnotSolve {
        values: v,
        condition_estimate,
        used_qr: true,
    })
}

/// Expands knot values to fitted values at every design point.
pub(crate) fn interpolate(x: &[f64], knots: &[usize], values: &[f64]) -> Vec<f64> {
    let mut fitted = vec![0.0; x.len()];
    for (i, seg, lam) in rows(x, knots) {
        fitted[i] = if lam == 0.0 {
            values[seg]
        } else if lam == 1.0 {
            values[seg + 1]
        } else {
            (1.0 - lam) * values[seg] + lam * values[seg + 1]
        };
    }
    fitted
}

/// Slope increase at each interior knot.
pub(crate) fn slope_changes(x: &[f64], knots: &[usize], values: &[f64]) -> Vec<f64> {
    let slopes: Vec<f64> = knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| (v[1] - v[0]) / (x[k[1]] - x[k[0]]))
        .collect();
    slopes.windows(2).map(|s| s[1] - s[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_and_normal_equations_agree() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 / 39.0).powi(2)).collect();
        let y: Vec<f64> = x.iter().map(|v| (7.0 * v).sin() + v * v).collect();
        let w: Vec<f64> = (0..40).map(|i| 1.0 + (i % 3) as f64).collect();
        let knots = [0, 5, 6, 20, 33, 39];
        let ne = solve(&x, &y, &w, &knots).unwrap();
        assert!(!ne.used_qr);
        let qr = solve_qr(&x, &y, &w, &knots, 0.0).unwrap();
        for (a, b) in ne.values.iter().zip(&qr.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn exact_on_piecewise_linear_data() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| (v - 0.3f64).abs() + 2.0 * (v - 0.7f64).max(0.0)).collect();
        let w = vec![1.0; 11];
        let knots = [0, 3, 7, 10];
        let sol = solve(&x, &y, &w, &knots).unwrap();
        let fitted = interpolate(&x, &knots, &sol.values);
        for (f, t) in fitted.iter().zip(&y) {
            assert!((f - t).abs() < 1e-12);
        }
        let b = slope_changes(&x, &knots, &sol.values);
        assert!((b[0] - 2.0).abs() < 1e-10 && (b[1] - 2.0).abs() < 1e-10);
    }
}

//! Test-only reference implementations that share no code with the solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Convex LSE by exhaustive enumeration of kink subsets.
///
/// Candidate kinks are the distinct design values strictly inside the
/// range, so repeated `x` values are allowed. For every subset the
/// unconstrained hinge regression `a + b0 x + sum b_j (x - k_j)_+` is solved
/// by SVD; subsets with all `b_j > 0` are feasible and the feasible minimiser
/// of the residual sum of squares is returned, one value per observation.
/// Only usable for small `n`.
pub fn enumeration_oracle(x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let interior: Vec<f64> = distinct[1..distinct.len() - 1].to_vec();
    assert!(interior.len() <= 12, "oracle is exponential in n");
    let yv = DVector::from_column_slice(y);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1u32 << interior.len()) {
        let kinks: Vec<f64> = (0..interior.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| interior[b])
            .collect();
        let cols = 2 + kinks.len();
        let design = DMatrix::from_fn(n, cols, |i, c| match c {
            0 => 1.0,
            1 => x[i],
            _ => (x[i] - kinks[c - 2]).max(0.0),
        });
        let svd = design.clone().svd(true, true);
        let coef = svd.solve(&yv, 1e-13).expect("svd solve");
        if !kinks.is_empty() && coef.iter().skip(2).any(|&b| b <= 0.0) {
            continue;
        }
        let fitted = &design * &coef;
        let rss: f64 = fitted.iter().zip(y).map(|(f, t)| (t - f) * (t - f)).sum();
        if best.as_ref().map_or(true, |(_, b)| rss < *b) {
            best = Some((fitted.iter().copied().collect(), rss));
        }
    }
    best.expect("affine subset is always feasible")
}

/// Random instance: sorted uniform design, Gaussian responses.
pub fn random_instance(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    x.sort_by(f64::total_cmp);
    let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    (x, y)
}

/// Random convex function as a positive mixture of hinges plus a line.
pub fn random_convex(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let hinges: Vec<(f64, f64)> = (0..rng.random_range(0..5))
        .map(|_| (rng.random::<f64>(), 3.0 * rng.random::<f64>()))
        .collect();
    move |t: f64| {
        hinges
            .iter()
            .fold(a + b * t, |acc, &(loc, c)| acc + c * (t - loc).max(0.0))
    }
}

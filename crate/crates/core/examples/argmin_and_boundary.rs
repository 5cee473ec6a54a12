// Locating the minimum of a convex regression function, reading off the
// boundary values, and the local scale constants.

use std::error::Error;

use convexreg::simulation::{derive_seed, rng::rng_from_seed};
use convexreg::{
    argmin_estimator, boundary_diagnostics, fit_convex_lse, local_estimates, scaling_constants,
    Dataset, ToleranceConfig,
};
use rand::Rng;
use rand_distr::StandardNormal;

fn sample(n: usize, seed: u64, mean: impl Fn(f64) -> f64) -> Result<Dataset, Box<dyn Error>> {
    let mut rng = rng_from_seed(seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let e: f64 = rng.sample(StandardNormal);
            (x, mean(x) + 0.5 * e)
        })
        .collect();
    Ok(Dataset::from_points(&pts)?)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = ToleranceConfig::default();
    let mean = |x: f64| 2.0 * (x - 0.5) * (x - 0.5);
    for n in [200, 800, 3200] {
        let data = sample(n, derive_seed(1, &[n as u64]), mean)?;
        let (fit, _) = fit_convex_lse(&data, &config)?;
        let a = argmin_estimator(&fit, &data);
        let local = local_estimates(&fit, &data, 0.5, 0.1, Some(&mean))?;
        println!(
            "n = {n:>5}: argmin {:.4} (ties {}), fit(0.5) {:+.4}, slope {:+.4}, sup dev {:.4}",
            a.location,
            a.tie_count,
            local.value,
            local.left_derivative,
            local.sup_deviation.unwrap_or(f64::NAN)
        );
    }

    // Decreasing at 0: the extrapolated boundary value overshoots.
    let edge = |x: f64| 1.0 - x + x * x;
    let data = sample(2000, 5, edge)?;
    let (fit, _) = fit_convex_lse(&data, &config)?;
    let b = boundary_diagnostics(&fit, &data);
    println!(
        "fit(0) = {:.3} (truth 1), slope at 0 = {:.3}; fit(1) = {:.3}, slope at 1 = {:.3}",
        b.value_at_0, b.deriv_at_0, b.value_at_1, b.deriv_at_1
    );

    let (d1, d2) = scaling_constants(2, 0.5, 4.0)?;
    println!("scale constants for r = 2, sigma = 0.5, mu'' = 4: d1 = {d1:.4}, d2 = {d2:.4}");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

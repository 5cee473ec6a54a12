// Log-bias against log-sample-size for both mean shapes, at a size small
// enough to run in a few seconds.

use std::error::Error;

use convexreg::simulation::{log_spaced_sizes, rate_study, ReplicateConfig, ScenarioKind};
use convexreg::stats::median;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let grid = log_spaced_sizes(200, 3000, 5);
    for (kind, expected) in [
        (ScenarioKind::VanishingDerivatives { r: 4 }, -4.0 / 9.0),
        (ScenarioKind::Affine, -0.5),
    ] {
        let result = rate_study(&ReplicateConfig::new(kind, grid.clone(), 30, 2), 0.5)?;
        println!(
            "{:<9} slope {:+.3} (se {:.3}), theory {expected:+.3}",
            kind.name(),
            result.slope,
            result.slope_stderr
        );
        for &n in &grid {
            let logs: Vec<f64> = result
                .records
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.log_abs_bias)
                .collect();
            println!("  n = {n:>5}: median log|bias| {:+.3}", median(&logs));
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

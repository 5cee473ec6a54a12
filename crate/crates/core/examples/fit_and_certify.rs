// Fit noisy convex data, print the hinge representation and the
// optimality certificate.

use std::error::Error;

use convexreg::simulation::{generate_scenario, ScenarioKind, ScenarioSpec};
use convexreg::{
    characterization_report, evaluate, fit_convex_lse, hinge_representation, ToleranceConfig,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = ScenarioSpec::new(ScenarioKind::VanishingDerivatives { r: 2 }, 400, 17);
    let data = generate_scenario(&spec)?;
    let config = ToleranceConfig::default();
    let (fit, trace) = fit_convex_lse(&data, &config)?;

    println!(
        "n = {}, kinks = {}, solves = {}, objective = {:.4}",
        data.len(),
        fit.kinks().len(),
        trace.iterations,
        fit.objective(&data)
    );
    let hinge = hinge_representation(&fit, &data);
    println!("intercept {:.4}, base slope {:.4}", hinge.intercept, hinge.base_slope);
    for h in hinge.hinges.iter().take(5) {
        println!("  + {:.4} * (x - {:.4})_+", h.coeff, h.location);
    }
    for t in [0.25, 0.5, 0.75] {
        println!("fit({t}) = {:.4}, truth = {:.4}", evaluate(&fit, &data, t)?, spec.mean_function(t));
    }

    let report = characterization_report(&data, &fit, &config)?;
    for c in &report.conditions {
        println!("{:<34} {:>9.2e} {}", c.name, c.worst, if c.passed { "ok" } else { "FAIL" });
    }
    assert!(report.passed);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

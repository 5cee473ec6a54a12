// The cumulative process, tent functionals and segment sums of a fit, and
// how they react when the fit is tampered with.

use std::error::Error;

use convexreg::simulation::{generate_scenario, ScenarioKind, ScenarioSpec};
use convexreg::{
    characterization_report, fit_convex_lse, g_process, segment_reports, tent_functional,
    ConvexFit, ToleranceConfig,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let data = generate_scenario(&ScenarioSpec::new(ScenarioKind::Affine, 300, 3))?;
    let config = ToleranceConfig::default();
    let (fit, _) = fit_convex_lse(&data, &config)?;

    let g = g_process(&data, &fit)?;
    println!("G: min {:.3e}, max {:.3e}, at kinks {:?}", g.min_value, g.max_value, g.kink_values);

    let x = data.x();
    let knots = fit.knots();
    for w in knots.windows(2) {
        let z = tent_functional(&data, &fit, x[w[0]], x[w[1]])?;
        println!("Z({:.3}, {:.3}) = {z:.3e}", x[w[0]], x[w[1]]);
    }
    for s in segment_reports(&data, &fit)?.segments {
        println!(
            "[{:.3}, {:.3}] T1 {:+.2e} T2 {:+.2e} sup gap {:.2e} <= {:.2e}",
            s.u, s.v, s.t1, s.t2, s.sup_gap, s.gap_bound
        );
    }

    // Nudge one fitted value; the report names what broke.
    let mut f = fit.fitted().to_vec();
    f[150] -= 0.2;
    let bad = ConvexFit::from_fitted(&data, f, &config)?;
    let report = characterization_report(&data, &bad, &config)?;
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    println!("tampered fit fails: {failed:?}");
    assert!(!report.passed);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

// Discrete invelope paths: check H >= Y, then compare the grid-refined
// moments of H''(0).

use std::error::Error;

use convexreg::simulation::{
    derive_seed, simulate_affine_invelope, simulate_invelope_refined, InvelopeConfig,
};
use convexreg::stats::{mean, median, variance};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = InvelopeConfig::canonical(2, 4.0, 500);
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for s in 0..100 {
        let (a, b) = simulate_invelope_refined(&config, derive_seed(9, &[s]))?;
        if s == 0 {
            let gaps = a.invelope_gaps();
            let lowest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "path 0: {} kinks, min (H - Y) = {lowest:.3e}, H''(0) = {:.4}, H'''(0) = {:.4}",
                a.kinks().len(),
                a.h2(0.0)?,
                a.h3(0.0)?
            );
        }
        coarse.push(a.sample()?.h2);
        fine.push(b.sample()?.h2);
    }
    println!(
        "H''(0): m = 500 mean {:.4} var {:.4}; m = 1000 mean {:.4} var {:.4}",
        mean(&coarse),
        variance(&coarse),
        mean(&fine),
        variance(&fine)
    );

    let flat: Vec<f64> = (0..100)
        .map(|s| simulate_affine_invelope(500, derive_seed(10, &[s])).map(|x| x.h2))
        .collect::<Result<_, _>>()?;
    println!("drift-free H''(0.5): median {:.4}", median(&flat));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

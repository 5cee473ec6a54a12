//! Replicated fits over a grid of sample sizes and the log-bias rate study.

use rayon::prelude::*;
use serde::Serialize;

use super::rng::derive_seed;
use super::scenario::{generate_scenario, NoiseKind, ScenarioKind, ScenarioSpec};
use crate::error::SimulationError;
use crate::model::{evaluate, ConvexFit, Dataset, ToleranceConfig};
use crate::solver::fit_convex_lse;
use crate::stats::ols_line;

/// Biases at or below this magnitude (relative to `max(1, amplitude)`) are
/// treated as exact zeros and skipped.
pub const ZERO_BIAS_THRESHOLD: f64 = 1e-9;

/// Settings shared by every replicated study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateConfig {
    pub kind: ScenarioKind,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub amplitude: f64,
    pub sigma: f64,
    pub noise: NoiseKind,
    pub tolerance: ToleranceConfig,
}

impl ReplicateConfig {
    pub fn new(kind: ScenarioKind, n_grid: Vec<usize>, replicates: usize, seed: u64) -> Self {
        Self {
            kind,
            n_grid,
            replicates,
            seed,
            amplitude: 2.0,
            sigma: 1.0,
            noise: NoiseKind::Gaussian,
            tolerance: ToleranceConfig::default(),
        }
    }

    /// Spec of replicate `replicate` at sample size `n`.
    pub fn scenario(&self, n: usize, replicate: usize) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.kind,
            amplitude: self.amplitude,
            sigma: self.sigma,
            n,
            seed: derive_seed(self.seed, &[n as u64, replicate as u64]),
            noise: self.noise,
        }
    }

    fn validate(&self, min_replicates: usize) -> Result<(), SimulationError> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimulationError::InvalidSpec(
                "n_grid must be nonempty and strictly increasing".into(),
            ));
        }
        if self.replicates < min_replicates {
            return Err(SimulationError::InvalidSpec(format!(
                "need at least {min_replicates} replicates, got {}",
                self.replicates
            )));
        }
        self.tolerance.validate()?;
        for &n in &self.n_grid {
            self.scenario(n, 0).validate()?;
        }
        Ok(())
    }
}

/// Output of one replicate: its coordinates, seed and a user statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replicate<T> {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub value: T,
}

/// Generates and fits every `(n, replicate)` dataset in parallel and maps
/// each fit through `stat`. Output is ordered by `n`, then replicate.
pub fn replicate_fits<T, F>(config: &ReplicateConfig, stat: F) -> Result<Vec<Replicate<T>>, SimulationError>
where
    T: Send,
    F: Fn(&ScenarioSpec, &Dataset, &ConvexFit) -> Result<T, SimulationError> + Sync,
{
    config.validate(1)?;
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();
    let results: Vec<Result<Replicate<T>, SimulationError>> = jobs
        .par_iter()
        .map(|&(n, replicate)| {
            let spec = config.scenario(n, replicate);
            let ds = generate_scenario(&spec)?;
            let (fit, _) = fit_convex_lse(&ds, &config.tolerance)?;
            Ok(Replicate {
                n,
                replicate,
                seed: spec.seed,
                value: stat(&spec, &ds, &fit)?,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// `sizes` log-spaced integers from `lo` to `hi` inclusive.
pub fn log_spaced_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub bias: f64,
    pub log_n: f64,
    /// `None` when the bias was an exact zero and the record was skipped.
    pub log_abs_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudyResult {
    pub records: Vec<RateRecord>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub skipped: usize,
}

/// Fits every replicate, records `log |fit(x0) - mu(x0)|` and regresses it
/// on `log n` over all usable records.
pub fn rate_study(config: &ReplicateConfig, x0: f64) -> Result<RateStudyResult, SimulationError> {
    config.validate(20)?;
    if !(0.0..=1.0).contains(&x0) {
        return Err(SimulationError::InvalidSpec(format!("x0 must lie in [0, 1], got {x0}")));
    }
    let threshold = ZERO_BIAS_THRESHOLD * config.amplitude.abs().max(1.0);
    let reps = replicate_fits(config, |spec, ds, fit| {
        Ok(evaluate(fit, ds, x0)? - spec.mean_function(x0))
    })?;
    let records: Vec<RateRecord> = reps
        .into_iter()
        .map(|r| RateRecord {
            n: r.n,
            replicate: r.replicate,
            seed: r.seed,
            bias: r.value,
            log_n: (r.n as f64).ln(),
            log_abs_bias: (r.value.abs() > threshold).then(|| r.value.abs().ln()),
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| r.log_abs_bias.map(|l| (r.log_n, l)))
        .unzip();
    let skipped = records.len() - xs.len();
    if xs.is_empty() {
        return Err(SimulationError::AllRecordsSkipped { skipped });
    }
    let line = ols_line(&xs, &ys).ok_or(SimulationError::DegenerateRegression)?;
    Ok(RateStudyResult {
        records,
        slope: line.slope,
        slope_stderr: line.slope_stderr,
        intercept: line.intercept,
        skipped,
    })
}

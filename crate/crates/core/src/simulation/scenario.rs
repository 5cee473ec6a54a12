//! Regression models `Y = mu(X) + sigma * eps` with `X ~ Uniform(0, 1)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::rng::rng_from_seed;
use crate::error::SimulationError;
use crate::model::Dataset;

/// Shape of the mean function around `x0 = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `amplitude * (x - 0.5)^r`, `r` even.
    VanishingDerivatives { r: u32 },
    /// `amplitude * (x - 0.5)`.
    Affine,
}

impl ScenarioKind {
    /// Order used in output records; 1 for the affine model.
    pub fn order(&self) -> u32 {
        match self {
            ScenarioKind::VanishingDerivatives { r } => *r,
            ScenarioKind::Affine => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::VanishingDerivatives { .. } => "vanishing",
            ScenarioKind::Affine => "affine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Uniform on `[-sqrt 3, sqrt 3]`, unit variance.
    Uniform,
}

impl NoiseKind {
    pub(crate) fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseKind::Gaussian => rng.sample(StandardNormal),
            NoiseKind::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub amplitude: f64,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    pub noise: NoiseKind,
}

impl ScenarioSpec {
    /// Amplitude 2, unit Gaussian noise.
    pub fn new(kind: ScenarioKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            amplitude: 2.0,
            sigma: 1.0,
            n,
            seed,
            noise: NoiseKind::Gaussian,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if let ScenarioKind::VanishingDerivatives { r } = self.kind {
            if r < 2 || r % 2 != 0 {
                return Err(SimulationError::InvalidSpec(format!(
                    "r must be an even integer >= 2, got {r}"
                )));
            }
        }
        if self.n < 10 {
            return Err(SimulationError::InvalidSpec(format!(
                "sample size must be at least 10, got {}",
                self.n
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SimulationError::InvalidSpec(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(SimulationError::InvalidSpec("amplitude must be finite".into()));
        }
        Ok(())
    }

    /// The true regression function.
    pub fn mean_function(&self, x: f64) -> f64 {
        match self.kind {
            ScenarioKind::VanishingDerivatives { r } => self.amplitude * (x - 0.5).powi(r as i32),
            ScenarioKind::Affine => self.amplitude * (x - 0.5),
        }
    }
}

/// Draws `(X_i, Y_i)` pairs in sequence from the scenario seed.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Dataset, SimulationError> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let points: Vec<(f64, f64)> = (0..spec.n)
        .map(|_| {
            let x: f64 = rng.random();
            let eps = spec.noise.draw(&mut rng);
            (x, spec.mean_function(x) + spec.sigma * eps)
        })
        .collect();
    Ok(Dataset::from_points(&points)?)
}

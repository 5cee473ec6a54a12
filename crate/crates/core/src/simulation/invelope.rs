//! Discrete approximation of the invelope processes.
//!
//! The canonical problem is a white-noise regression on a uniform midpoint
//! grid of `m` cells over `[-c, c]`: responses are
//! `(r+1)(r+2) t^r + eta / sqrt(delta)` with i.i.d. standard normal `eta`
//! and cell width `delta`. Integrating the responses twice gives a discrete
//! version of `Y(t) = int_0^t W + t^(r+2)`; the convex LSE on the grid is the
//! discrete `H''` and its double integral the discrete invelope `H >= Y`.
//! The affine variant has zero drift on `[0, 1]`.
//!
//! The grid is mapped affinely onto `[0, 1]` for fitting; convex fits are
//! invariant under that map up to the derivative scale.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::rng::rng_from_seed;
use crate::error::SimulationError;
use crate::model::{evaluate, left_derivative, ConvexFit, Dataset, ToleranceConfig};
use crate::solver::fit_convex_lse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InvelopeKind {
    /// Drift `(r+1)(r+2) t^r` on `[-c, c]`.
    Canonical { r: u32 },
    /// No drift on `[0, 1]`.
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvelopeConfig {
    pub kind: InvelopeKind,
    /// Half-width of the canonical grid; unused by the affine variant.
    pub c: f64,
    pub m: usize,
    /// Where `H''` and `H'''` are read off.
    pub point: f64,
    /// Multiplier on the noise; 0 gives the drift-only problem.
    pub noise_scale: f64,
}

impl InvelopeConfig {
    pub fn canonical(r: u32, c: f64, m: usize) -> Self {
        Self {
            kind: InvelopeKind::Canonical { r },
            c,
            m,
            point: 0.0,
            noise_scale: 1.0,
        }
    }

    pub fn affine(m: usize) -> Self {
        Self {
            kind: InvelopeKind::Affine,
            c: 0.5,
            m,
            point: 0.5,
            noise_scale: 1.0,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self.kind {
            InvelopeKind::Canonical { .. } => (-self.c, self.c),
            InvelopeKind::Affine => (0.0, 1.0),
        }
    }

    pub fn delta(&self) -> f64 {
        let (lo, hi) = self.domain();
        (hi - lo) / self.m as f64
    }

    /// Midpoint grid.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, _) = self.domain();
        let d = self.delta();
        (0..self.m).map(|i| lo + (i as f64 + 0.5) * d).collect()
    }

    pub fn drift(&self, t: f64) -> f64 {
        match self.kind {
            InvelopeKind::Canonical { r } => ((r + 1) * (r + 2)) as f64 * t.powi(r as i32),
            InvelopeKind::Affine => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if let InvelopeKind::Canonical { r } = self.kind {
            if r < 2 || r % 2 != 0 {
                return Err(SimulationError::InvalidSpec(format!(
                    "r must be an even integer >= 2, got {r}"
                )));
            }
            if !(self.c > 0.0 && self.c.is_finite()) {
                return Err(SimulationError::InvalidSpec(format!(
                    "c must be positive, got {}",
                    self.c
                )));
            }
        }
        if self.m < 200 {
            return Err(SimulationError::InvalidSpec(format!(
                "grid size must be at least 200, got {}",
                self.m
            )));
        }
        let (lo, hi) = self.domain();
        if !(self.point >= lo && self.point <= hi) {
            return Err(SimulationError::InvalidSpec(format!(
                "point {} is outside [{lo}, {hi}]",
                self.point
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(SimulationError::InvalidSpec("noise_scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One simulated grid problem and its fit.
#[derive(Debug, Clone)]
pub struct InvelopePath {
    pub config: InvelopeConfig,
    pub seed: u64,
    pub t: Vec<f64>,
    pub responses: Vec<f64>,
    pub fit: ConvexFit,
    dataset: Dataset,
}

/// Values read off one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvelopeSample {
    pub kind: InvelopeKind,
    pub domain: (f64, f64),
    pub m: usize,
    pub seed: u64,
    pub point: f64,
    /// Discrete `H''` at `point` (linear interpolation on the grid).
    pub h2: f64,
    /// Discrete `H'''` at `point` (left derivative).
    pub h3: f64,
    /// Smallest grid point minimising the discrete `H''`.
    pub argmin_h2: f64,
}

impl InvelopePath {
    fn to_unit(&self, t: f64) -> f64 {
        let (lo, hi) = self.config.domain();
        ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn fitted(&self) -> &[f64] {
        self.fit.fitted()
    }

    /// Discrete `H''` at `t`.
    pub fn h2(&self, t: f64) -> Result<f64, SimulationError> {
        Ok(evaluate(&self.fit, &self.dataset, self.to_unit(t))?)
    }

    /// Discrete `H'''(t-)`.
    pub fn h3(&self, t: f64) -> Result<f64, SimulationError> {
        let (lo, hi) = self.config.domain();
        Ok(left_derivative(&self.fit, &self.dataset, self.to_unit(t))? / (hi - lo))
    }

    /// `H_n - Y_n` at each grid point: the double cumulative sum of
    /// `(fitted - response) * delta`, starting from 0 at the first point.
    pub fn invelope_gaps(&self) -> Vec<f64> {
        let d = self.config.delta();
        let mut gaps = Vec::with_capacity(self.t.len());
        let (mut inner, mut outer) = (0.0, 0.0);
        for (f, x) in self.fitted().iter().zip(&self.responses) {
            gaps.push(outer);
            inner += (f - x) * d;
            outer += inner * d;
        }
        gaps
    }

    /// Scale used to normalise [`InvelopePath::invelope_gaps`]:
    /// squared domain length times `1 + max |response|`.
    pub fn gap_scale(&self) -> f64 {
        let (lo, hi) = self.config.domain();
        let ymax = self.responses.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        (hi - lo) * (hi - lo) * (1.0 + ymax)
    }

    /// Grid indices of the fit's kinks.
    pub fn kinks(&self) -> &[usize] {
        self.fit.kinks()
    }

    pub fn sample(&self) -> Result<InvelopeSample, SimulationError> {
        let f = self.fitted();
        let min = f.iter().copied().fold(f64::INFINITY, f64::min);
        let idx = f.iter().position(|&v| v - min <= 1e-12).unwrap_or(0);
        Ok(InvelopeSample {
            kind: self.config.kind,
            domain: self.config.domain(),
            m: self.config.m,
            seed: self.seed,
            point: self.config.point,
            h2: self.h2(self.config.point)?,
            h3: self.h3(self.config.point)?,
            argmin_h2: self.t[idx],
        })
    }
}

fn path_from_noise(config: &InvelopeConfig, seed: u64, eta: &[f64]) -> Result<InvelopePath, SimulationError> {
    let t = config.grid();
    let noise = config.noise_scale / config.delta().sqrt();
    let responses: Vec<f64> = t
        .iter()
        .zip(eta)
        .map(|(&ti, &e)| config.drift(ti) + noise * e)
        .collect();
    let (lo, hi) = config.domain();
    let s: Vec<f64> = t.iter().map(|ti| (ti - lo) / (hi - lo)).collect();
    let dataset = Dataset::from_xy(&s, &responses)?;
    let (fit, _) = fit_convex_lse(&dataset, &ToleranceConfig::default())?;
    Ok(InvelopePath {
        config: *config,
        seed,
        t,
        responses,
        fit,
        dataset,
    })
}

fn normals(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn simulate_invelope_path(config: &InvelopeConfig, seed: u64) -> Result<InvelopePath, SimulationError> {
    config.validate()?;
    path_from_noise(config, seed, &normals(seed, config.m))
}

/// Paths on `m` and `2m` cells driven by the same Brownian path: each coarse
/// noise value is the normalised sum of its two fine cells. The fine path
/// equals `simulate_invelope_path` with `2m` cells and the same seed.
pub fn simulate_invelope_refined(
    config: &InvelopeConfig,
    seed: u64,
) -> Result<(InvelopePath, InvelopePath), SimulationError> {
    config.validate()?;
    let fine_cfg = InvelopeConfig {
        m: 2 * config.m,
        ..*config
    };
    let fine_eta = normals(seed, fine_cfg.m);
    let coarse_eta: Vec<f64> = fine_eta
        .chunks(2)
        .map(|p| (p[0] + p[1]) / std::f64::consts::SQRT_2)
        .collect();
    let coarse = path_from_noise(config, seed, &coarse_eta)?;
    let fine = path_from_noise(&fine_cfg, seed, &fine_eta)?;
    Ok((coarse, fine))
}

/// Canonical problem of order `r` read off at 0.
pub fn simulate_invelope(r: u32, c: f64, m: usize, seed: u64) -> Result<InvelopeSample, SimulationError> {
    simulate_invelope_path(&InvelopeConfig::canonical(r, c, m), seed)?.sample()
}

/// Drift-free problem on `[0, 1]` read off at 0.5.
pub fn simulate_affine_invelope(m: usize, seed: u64) -> Result<InvelopeSample, SimulationError> {
    simulate_invelope_path(&InvelopeConfig::affine(m), seed)?.sample()
}

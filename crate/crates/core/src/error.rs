//! Error types shared across the crate.

use thiserror::Error;

use crate::solver::SolverTrace;

/// Errors raised while building or querying the data model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("need at least 2 distinct design points, got {0}")]
    TooFewPoints(usize),
    #[error("design point {value} at position {index} is outside [0, 1]")]
    OutOfDomain { index: usize, value: f64 },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("query point {0} is outside [0, 1]")]
    QueryOutOfDomain(f64),
    #[error("invalid tolerance configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Failures of the convex least-squares solver.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("active-set iteration did not converge within {max_iterations} iterations")]
    NonConvergence {
        max_iterations: usize,
        trace: Box<SolverTrace>,
    },
    #[error("segment least-squares system is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("solver output failed certification: {reason}")]
    CertificationFailed {
        reason: String,
        trace: Box<SolverTrace>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SolverError {
    /// The iteration trace, when the failure carries one.
    pub fn trace(&self) -> Option<&SolverTrace> {
        match self {
            SolverError::NonConvergence { trace, .. }
            | SolverError::CertificationFailed { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Errors from the simulation harness.
#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation parameters: {0}")]
    InvalidSpec(String),
    #[error("all {skipped} records had zero bias; log-bias regression is undefined")]
    AllRecordsSkipped { skipped: usize },
    #[error("rate regression needs at least two distinct sample sizes with usable records")]
    DegenerateRegression,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

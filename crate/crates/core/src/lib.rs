//! Univariate convex least-squares regression.
//!
//! The crate fits the convex least-squares estimator on `[0, 1]`, certifies
//! it through its cumulative-sum characterization, exposes the finite-sample
//! objects used in its local asymptotic analysis, and ships a Monte Carlo
//! harness for rate-of-convergence and limit-process studies.
//!
//! ```
//! use convexreg::{fit_convex_lse, Dataset, ToleranceConfig};
//!
//! let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
//! let y: Vec<f64> = x.iter().map(|v| (v - 0.4) * (v - 0.4)).collect();
//! let data = Dataset::from_xy(&x, &y).unwrap();
//! let (fit, trace) = fit_convex_lse(&data, &ToleranceConfig::default()).unwrap();
//! assert!(trace.final_objective < 1e-12);
//! assert_eq!(fit.fitted().len(), 50);
//! ```

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod model;
pub mod simulation;
pub mod solver;
pub mod stats;

pub use diagnostics::{
    characterization_report, g_process, segment_reports, tent_functional, tent_weight, GProcess,
    KktReport, SegmentReport,
};
pub use error::{ModelError, SimulationError, SolverError};
pub use model::{
    build_dataset, evaluate, hinge_representation, left_derivative, ConvexFit, Dataset, Hinge,
    HingeRepresentation, ToleranceConfig,
};
pub use inference::{
    argmin_estimator, boundary_diagnostics, local_estimates, scaling_constants, ArgminResult,
    BoundaryDiagnostics, LocalEstimates,
};
pub use solver::{fit_convex_lse, kkt_sums, KktSums, SolverTrace};

//! Data generators and replicated studies.

pub mod invelope;
pub mod rates;
pub mod rng;
pub mod scenario;

pub use invelope::{
    simulate_affine_invelope, simulate_invelope, simulate_invelope_path, simulate_invelope_refined,
    InvelopeConfig, InvelopeKind, InvelopePath, InvelopeSample,
};
pub use rates::{
    log_spaced_sizes, rate_study, replicate_fits, RateRecord, RateStudyResult, Replicate,
    ReplicateConfig,
};
pub use rng::derive_seed;
pub use scenario::{generate_scenario, NoiseKind, ScenarioKind, ScenarioSpec};

//! Backward-time branching diffusions with signed, differentiated particles.

mod estimate;
mod extrapolate;
mod replica;
mod spec;
mod stats;

use thiserror::Error;

use crate::functions::FunctionError;
use crate::jetcalc::Admissibility;

pub use estimate::{estimate, Diagnostics, EstimateReport, CSV_HEADER};
pub use extrapolate::{extrapolate_beta, BetaPoint, FitReport};
pub use replica::{
    exit_functional_mckean, exit_functional_super, replica_stream, run_replica, Particle, ParticleTag, ReplicaOutcome,
};
pub use spec::{
    DerivTagConvention, ErrorBars, Mode, RunSpec, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_FAILURE_BUDGET,
    DEFAULT_POPULATION_CAP,
};
pub use stats::{merge_accumulators, EstimatorAccumulator};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid run specification: {0}")]
    InvalidSpec(String),
    #[error("{failed} of {replicas} replicas exceeded the population cap {cap}")]
    PopulationCapExceeded { cap: u64, failed: u64, replicas: u64 },
    #[error("v_hat = {v_hat} ≤ 0; the type II rescaling cannot be inverted")]
    DegenerateEstimate { v_hat: f64 },
    #[error("existence check returned {status:?}: {reason}")]
    NotAdmissible { status: Admissibility, reason: String },
    #[error("ill-conditioned β fit: {0}")]
    IllConditionedFit(String),
    #[error("extrapolation needs at least two distinct β values, got {distinct}")]
    InsufficientPoints { distinct: usize },
    #[error(transparent)]
    Function(#[from] FunctionError),
}

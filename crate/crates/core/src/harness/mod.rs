//! Experiment configuration and the operations behind the command line.

mod commands;
mod config;

use thiserror::Error;

use crate::engine::EngineError;
use crate::functions::FunctionError;
use crate::jetcalc::JetError;
use crate::oracle::OracleError;

pub use commands::{
    compare, compare_csv, compile_cmd, estimates_csv, exist_check, expand_cmd, oracle, oracle_rows, psi_cmd, run,
    sweep, CommandOutput, CompareRow, OracleRow, OutputFile, SweepRow, ORACLE_CSV_HEADER,
};
pub use config::{
    parse_ansatz, EngineOptions, EquationSpec, ExperimentConfig, OracleConfig, OutputConfig, Overrides, ResolvedConfig,
    Tolerance, ToleranceScope,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => EXIT_CONFIG,
            HarnessError::Divergence(_) => EXIT_DIVERGENCE,
            HarnessError::Assertion(_) => EXIT_ASSERTION,
        }
    }
}

impl From<EngineError> for HarnessError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::PopulationCapExceeded { .. } | EngineError::DegenerateEstimate { .. } => {
                HarnessError::Divergence(e.to_string())
            }
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<OracleError> for HarnessError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BlowUpDetected { .. } => HarnessError::Divergence(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<JetError> for HarnessError {
    fn from(e: JetError) -> Self {
        match e {
            JetError::DivergentTerm { .. } => HarnessError::Divergence(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<FunctionError> for HarnessError {
    fn from(e: FunctionError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

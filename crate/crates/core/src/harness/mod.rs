//! Scenario files, Monte Carlo experiment drivers and CSV reports.
//!
//! Replication `r` of experiment `e` draws from a stream derived from
//! `(master seed, e, r)`, and results are collected in replication order,
//! so reports do not depend on the number of worker threads.

mod experiments;
mod report;
mod scenario;
pub mod stats;

pub use experiments::{
    run_clt, run_lln, sample_limit, sample_scaled, sup_deviation, CltReport, CltRow, LlnReport, LlnRow, CHECK_EPS,
};
pub use report::{emit_report, fmt, raw_path, ExperimentReport, Table};
pub use scenario::{
    parse_scenario, parse_scenario_with_grid, ArrivalKind, CltSettings, FluidReference, LlnSettings, Scenario, ServerMode, DEFAULT_GRID_STEP,
    DEFAULT_LIMIT_GRID_STEP, DEFAULT_TOL,
};

use thiserror::Error;

use crate::fluid::FluidError;
use crate::gaussian::GaussianError;
use crate::measures::MeasureError;
use crate::simulator::SimError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Sim(SimError::Config(_)) => 2,
            HarnessError::Fluid(FluidError::Invalid(_)) => 2,
            HarnessError::Gaussian(GaussianError::Invalid(_)) => 2,
            HarnessError::Measure(MeasureError::Invalid(_)) => 2,
            HarnessError::Io(_) | HarnessError::Csv(_) => 2,
            _ => 3,
        }
    }
}

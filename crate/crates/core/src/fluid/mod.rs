//! Volterra convolution equations and the fluid limit models built on them.
//!
//! Fluid paths are stored in linear interpolation mode. Node values are
//! the solution of the discretised equation; between nodes the paths are
//! interpolated, which is what makes convolutions of smooth inputs (such
//! as `e(t) = λt`) exact under midpoint quadrature.

mod condition;
mod model;
mod volterra;

pub use condition::{check_regularity, RegularityReport, Verdict};
pub use model::{
    infinite_server_fluid, solve_fluid, solve_fluid_extended, ExtendedInputs, ExtendedPaths, FluidModel,
    FluidSolution,
};
pub use volterra::{
    bound_rho, fixed_point_residual, regime, solve_volterra, Nonlinearity, Regime, VolterraProblem,
    VolterraSolution,
};

use thiserror::Error;

use crate::measures::MeasureError;

/// Default tolerance for deciding `q(t) = 1` on a float grid.
pub const LEVEL_TOL: f64 = 1e-9;

/// Default fixed-point tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default cap on successive approximations per block.
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Error)]
pub enum FluidError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("successive approximations did not converge after {iterations} iterations (last update {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("fixed-point residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("solution violates {0}")]
    Invariant(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

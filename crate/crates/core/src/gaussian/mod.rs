//! Gaussian limit processes: covariance construction, path sampling, the
//! Kiefer-process route to `Z`, and the pathwise solution of the limit
//! equations for the many-server and infinite-server queues.
//!
//! Limit paths are only ever represented at grid points; nothing is claimed
//! about them between nodes.

mod covariance;
mod kiefer;
mod limit;
mod sampling;

pub use covariance::{c_diagnostic, h_covariance, z_covariance, z_l_covariance};
pub use kiefer::{kiefer_grid_for, sample_kiefer, z_via_kiefer, KieferGrid};
pub use limit::{
    solve_limit_x, solve_limit_x_infserver, InfServerSample, InfServerSampler, LimitInputs, LimitSample,
    LimitSampler, X0Law, YSpec, ZSource,
};
pub use sampling::{brownian_bridge_at, brownian_path, sample_gaussian_path, sample_s, GaussianSampler};

use thiserror::Error;

use crate::fluid::FluidError;
use crate::measures::MeasureError;

/// Relative size of the diagonal jitter tried when a covariance matrix is
/// not numerically positive definite.
pub const PSD_JITTER: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("covariance matrix is not positive semidefinite even after jitter {jitter:e}")]
    NotPsd { jitter: f64 },
    #[error("point ({t}, {x}) is not on the Kiefer grid")]
    OffGrid { t: f64, x: f64 },
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

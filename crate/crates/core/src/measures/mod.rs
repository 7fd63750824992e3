//! Numeric substrate: mixed distribution functions, càdlàg grid paths and
//! Stieltjes calculus over them.
//!
//! Integration convention: `∫₀ᵗ` always means the integral over the closed
//! interval `[0, t]`, so an atom sitting at `0` (or at `t`) is included.
//! Paths obey `g(0−) = 0`, i.e. evaluation at negative times returns zero.

mod cdf;
mod kernel;
mod path;
mod stieltjes;
pub mod streams;

pub use cdf::{DistSpec, MixedCdf, MixtureComponent, Piece};
pub use kernel::ConvolutionKernel;
pub use path::{sup_distance, GridPath, Interp};
pub use stieltjes::{
    convolve_stieltjes, convolve_stieltjes_fn, f_prime, hazard_integral, stieltjes_integral, stieltjes_integral_fn,
    Hazard,
};
pub(crate) use path::node_count;

use thiserror::Error;

/// Default grid step, 2⁻⁷ time units.
pub const DEFAULT_GRID_STEP: f64 = 1.0 / 128.0;

/// Two times closer than this are treated as the same instant when locating
/// atoms and grid nodes.
pub const TIME_EPS: f64 = 1e-10;

/// Masses below this are treated as zero when checking tail exactness.
pub const MASS_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("evaluation at {x} lies beyond the represented horizon {horizon} and the distribution carries tail mass {tail}")]
    BeyondHorizon { x: f64, horizon: f64, tail: f64 },
    #[error("tail mass {0} cannot be sampled: no continuous density at the horizon")]
    UnsampleableTail(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// Snap `x / step` to an integer node index when it is within rounding of one.
/// Returns the integer part and the fractional remainder in `[0, 1)`.
pub(crate) fn split_index(x: f64, step: f64) -> (usize, f64) {
    let r = x / step;
    let k = r.round();
    if (r - k).abs() <= 1e-9 * r.abs().max(1.0) {
        (k.max(0.0) as usize, 0.0)
    } else {
        let f = r.floor();
        (f.max(0.0) as usize, r - f)
    }
}

/// `fine` divides `coarse` to within rounding.
pub(crate) fn divides(fine: f64, coarse: f64) -> bool {
    let r = coarse / fine;
    r.round() >= 1.0 && (r - r.round()).abs() <= 1e-9 * r
}

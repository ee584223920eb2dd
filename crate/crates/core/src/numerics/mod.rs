//! Shared numerical kernels.

pub mod cubic;
pub mod eigen;
pub mod optimize;
pub mod quadrature;
pub mod sampling;
pub mod spline;

use thiserror::Error;

pub use cubic::{cubic_real_nonneg_roots, CubicCandidates};
pub use eigen::power_iteration;
pub use optimize::{maximize_scalar, minimize_scalar, nelder_mead_max, ScalarOpt};
pub use quadrature::{
    gauss_weighted_integral, gauss_weighted_integral_vec, normal_pdf, GaussDomain, QuadratureSpec,
};
pub use sampling::{derive_seed, GaussianSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate bracket [{lo}, {hi}]")]
    DegenerateBracket { lo: f64, hi: f64 },
}

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

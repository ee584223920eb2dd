//! Random-duality lower bounds on the normalised phase-retrieval objective at
//! fixed squared norm `c` and overlap `x`.

pub mod lifted;
pub mod plain;
pub mod squared;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

pub use lifted::{f_q_lift, gamma_sph_hat, phi0_lifted, LiftParams, LiftedBoundResult, LiftedOptions};
pub use plain::{f_q_closed, phi0_plain, PlainBoundResult};
pub use squared::{f_q_sq, f_q_sq_lift, inner_min_sq, phi0_sq, phi0_sq_lifted};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RdtError {
    #[error("invalid point (c = {c}, x = {x}): {reason}")]
    InvalidPoint { c: f64, x: f64, reason: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A feasible (c, x) pair: squared norm `c` and overlap `x` with the planted
/// unit signal, together with the orthogonal radius `r = √(c − x²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub c: f64,
    pub x: f64,
    pub r: f64,
}

impl ParamPoint {
    pub fn new(c: f64, x: f64) -> Result<Self, RdtError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(RdtError::InvalidPoint { c, x, reason: "c must be positive" });
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(RdtError::InvalidPoint { c, x, reason: "x must be nonnegative" });
        }
        let r2 = c - x * x;
        // tolerate rounding on the boundary x = √c
        if r2 < -1e-12 * c {
            return Err(RdtError::InvalidPoint { c, x, reason: "x² exceeds c" });
        }
        Ok(Self { c, x, r: r2.max(0.0).sqrt() })
    }

    /// Point at normalised overlap ρ = x/√c ∈ [0, 1].
    pub fn from_rho(c: f64, rho: f64) -> Result<Self, RdtError> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(RdtError::InvalidPoint { c, x: rho, reason: "ρ outside [0, 1]" });
        }
        let sc = c.max(0.0).sqrt();
        let p = Self::new(c, rho * sc)?;
        Ok(Self { r: (1.0 - rho * rho).max(0.0).sqrt() * sc, ..p })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), RdtError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(RdtError::InvalidParameter(format!("alpha must be positive, got {alpha}")))
    }
}

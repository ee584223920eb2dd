//! Parametric manifolds (c, x) ↦ φ over a feasible lattice, funnel detection by
//! discrete descent flow, and bisection for critical oversampling ratios.

pub mod critical;
pub mod funnel;
pub mod grid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::QuadratureSpec;
use crate::rdt::lifted::{LiftedOptions, LiftedProfile};
use crate::rdt::plain::{f_q_closed, phi0_from_fq};
use crate::rdt::squared::{SquaredLiftedProfile, SquaredOptions, SquaredProfile};
use crate::rdt::{ParamPoint, RdtError};

pub use critical::{critical_alpha, curve_has_interior_max, CriticalPredicate, CriticalResult, CurveSpec};
pub use funnel::{detect_funnels, FunnelPoint, FunnelReport};
pub use grid::{barrier_manifold, build_manifold, AxisRange, GridSpec, ManifoldGrid, OverlapAxis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error(transparent)]
    Rdt(#[from] RdtError),
    #[error("predicate does not change sign on [{lo}, {hi}]")]
    BadBracket { lo: f64, hi: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{failed} of {total} nodes failed to evaluate")]
    TooManyFailures { failed: usize, total: usize },
}

/// Which bound populates the manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundVariant {
    Plain,
    Lifted,
    PlainSq,
    LiftedSq,
    /// t₀·φ_plain ∓ ln(1 − c), defined for c < 1.
    Barrier {
        t0: f64,
        #[serde(default)]
        sign: BarrierSign,
    },
}

/// Sign of the log term in the barrier composition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierSign {
    /// t₀·φ − ln(1 − c): the interior-point convention used by the algorithms.
    #[default]
    Interior,
    /// t₀·φ + ln(1 − c): the literal composition, which rewards c → 1.
    AsPrinted,
}

impl BoundVariant {
    pub fn name(&self) -> String {
        match self {
            BoundVariant::Plain => "plain".into(),
            BoundVariant::Lifted => "lifted".into(),
            BoundVariant::PlainSq => "plain_sq".into(),
            BoundVariant::LiftedSq => "lifted_sq".into(),
            BoundVariant::Barrier { t0, sign: BarrierSign::Interior } => format!("barrier({t0})"),
            BoundVariant::Barrier { t0, sign: BarrierSign::AsPrinted } => format!("barrier_as_printed({t0})"),
        }
    }

    /// Whether the (1, 1) node must carry the value 0.
    pub fn vanishes_at_solution(&self) -> bool {
        !matches!(self, BoundVariant::Barrier { .. })
    }
}

/// Optimiser budgets for the nested bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub quad: QuadratureSpec,
    pub opt_tol: f64,
    pub lifted: LiftedOptions,
    pub squared: SquaredOptions,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            opt_tol: 1e-9,
            lifted: LiftedOptions::default(),
            squared: SquaredOptions::default(),
        }
    }
}

/// Everything about one (c, x) point that does not depend on α, so that α
/// sweeps only redo the cheap outer optimisation.
#[derive(Clone, Debug)]
pub enum PointEvaluator {
    Plain { pt: ParamPoint, f_q: f64 },
    Lifted(Box<LiftedProfile>),
    PlainSq(Box<SquaredProfile>),
    LiftedSq(Box<SquaredLiftedProfile>),
    Barrier { pt: ParamPoint, f_q: f64, t0: f64, sign: BarrierSign },
}

impl PointEvaluator {
    pub fn new(variant: BoundVariant, pt: ParamPoint, opts: &BoundOptions) -> Result<Self, RdtError> {
        Ok(match variant {
            BoundVariant::Plain => PointEvaluator::Plain { pt, f_q: f_q_closed(&pt, &opts.quad)? },
            BoundVariant::Lifted => {
                PointEvaluator::Lifted(Box::new(LiftedProfile::new(pt, &opts.quad, &opts.lifted)?))
            }
            BoundVariant::PlainSq => {
                PointEvaluator::PlainSq(Box::new(SquaredProfile::new(pt, &opts.quad, &opts.squared)?))
            }
            BoundVariant::LiftedSq => {
                if pt.r == 0.0 {
                    PointEvaluator::PlainSq(Box::new(SquaredProfile::new(pt, &opts.quad, &opts.squared)?))
                } else {
                    PointEvaluator::LiftedSq(Box::new(SquaredLiftedProfile::new(pt, &opts.quad, &opts.squared)?))
                }
            }
            BoundVariant::Barrier { t0, sign } => {
                if !(t0 > 0.0) || pt.c >= 1.0 {
                    return Err(RdtError::InvalidParameter(format!("barrier needs t0 > 0 and c < 1 (t0 = {t0}, c = {})", pt.c)));
                }
                PointEvaluator::Barrier { pt, f_q: f_q_closed(&pt, &opts.quad)?, t0, sign }
            }
        })
    }

    pub fn eval(&self, alpha: f64, opts: &BoundOptions) -> Result<f64, RdtError> {
        crate::rdt::check_alpha(alpha)?;
        match self {
            PointEvaluator::Plain { pt, f_q } => Ok(phi0_from_fq(alpha, pt, *f_q).phi0),
            PointEvaluator::Lifted(p) => Ok(p.bound(alpha, opts.opt_tol, &opts.lifted)?.phi0_bar),
            PointEvaluator::PlainSq(p) => Ok(p.bound(alpha, &opts.quad, opts.opt_tol)?.0),
            PointEvaluator::LiftedSq(p) => Ok(p.bound(alpha, opts.opt_tol, &opts.squared)?.phi0_bar),
            PointEvaluator::Barrier { pt, f_q, t0, sign } => {
                let log = (1.0 - pt.c).ln();
                let base = t0 * phi0_from_fq(alpha, pt, *f_q).phi0;
                Ok(match sign {
                    BarrierSign::Interior => base - log,
                    BarrierSign::AsPrinted => base + log,
                })
            }
        }
    }
}

/// Single bound evaluation for any variant.
pub fn bound_value(variant: BoundVariant, alpha: f64, pt: ParamPoint, opts: &BoundOptions) -> Result<f64, RdtError> {
    PointEvaluator::new(variant, pt, opts)?.eval(alpha, opts)
}

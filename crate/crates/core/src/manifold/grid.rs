use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BarrierSign, BoundOptions, BoundVariant, ManifoldError, PointEvaluator};
use crate::rdt::ParamPoint;

/// Inclusive linear axis `lo..=hi` with `steps` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn nodes(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.hi } else { self.lo + h * k as f64 })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<(), ManifoldError> {
        let ok = self.steps >= 1
            && self.lo.is_finite()
            && self.hi.is_finite()
            && (self.hi > self.lo || (self.steps == 1 && self.hi == self.lo));
        if ok {
            Ok(())
        } else {
            Err(ManifoldError::InvalidGrid(format!("{name} axis {self:?}")))
        }
    }
}

/// How the second lattice coordinate is laid out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapAxis {
    /// Nodes at x = ρ√c with ρ on the given range, so every row spans the
    /// whole feasible interval [0, √c] including its boundary.
    #[default]
    Normalized,
    /// Nodes at the given x values; nodes with x² > c are infeasible.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c: AxisRange,
    /// x values (absolute axis) or ρ = x/√c values (normalised axis).
    pub x: AxisRange,
    pub axis: OverlapAxis,
}

impl GridSpec {
    /// Square lattice over c ∈ [c_lo, c_hi] and the full overlap range.
    pub fn square(c_lo: f64, c_hi: f64, n: usize) -> Self {
        Self { c: AxisRange::new(c_lo, c_hi, n), x: AxisRange::new(0.0, 1.0, n), axis: OverlapAxis::Normalized }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldGrid {
    pub alpha: f64,
    pub variant: BoundVariant,
    pub axis: OverlapAxis,
    pub c_axis: Vec<f64>,
    /// Second-axis labels (x or ρ depending on `axis`).
    pub x_axis: Vec<f64>,
    /// `values[i][j]` at (c_axis[i], x_axis[j]); `None` when infeasible or failed.
    pub values: Vec<Vec<Option<f64>>>,
    pub failed: Vec<(usize, usize)>,
}

impl ManifoldGrid {
    pub fn rows(&self) -> usize {
        self.c_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.x_axis.len()
    }

    /// Physical (c, x) coordinates of a node.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let c = self.c_axis[i];
        match self.axis {
            OverlapAxis::Absolute => (c, self.x_axis[j]),
            OverlapAxis::Normalized => (c, self.x_axis[j] * c.sqrt()),
        }
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn feasible_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    /// (c, x, φ) for every present node in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.rows()).flat_map(move |i| {
            (0..self.cols()).filter_map(move |j| self.values[i][j].map(|v| {
                let (c, x) = self.coords(i, j);
                (c, x, v)
            }))
        })
    }

    /// Grid built from explicit values (absolute axis); used for synthetic surfaces.
    pub fn from_values(c_axis: Vec<f64>, x_axis: Vec<f64>, values: Vec<Vec<Option<f64>>>) -> Self {
        Self {
            alpha: f64::NAN,
            variant: BoundVariant::Plain,
            axis: OverlapAxis::Absolute,
            c_axis,
            x_axis,
            values,
            failed: Vec::new(),
        }
    }
}

fn node_point(spec: &GridSpec, c: f64, s: f64) -> Option<ParamPoint> {
    match spec.axis {
        OverlapAxis::Absolute => ParamPoint::new(c, s).ok(),
        OverlapAxis::Normalized => ParamPoint::from_rho(c, s).ok(),
    }
}

/// Evaluate `variant` at level α on every feasible lattice node (in parallel).
pub fn build_manifold(
    alpha: f64,
    variant: BoundVariant,
    spec: &GridSpec,
    opts: &BoundOptions,
) -> Result<ManifoldGrid, ManifoldError> {
    spec.c.validate("c")?;
    spec.x.validate("x")?;
    if spec.c.lo <= 0.0 {
        return Err(ManifoldError::InvalidGrid("c must be positive".into()));
    }
    if spec.axis == OverlapAxis::Normalized && (spec.x.lo < 0.0 || spec.x.hi > 1.0) {
        return Err(ManifoldError::InvalidGrid("normalised overlap must lie in [0, 1]".into()));
    }
    if let BoundVariant::Barrier { t0, .. } = variant {
        if !(t0 > 0.0) || spec.c.hi >= 1.0 {
            return Err(ManifoldError::InvalidGrid("barrier manifolds need t0 > 0 and c < 1".into()));
        }
    }
    crate::rdt::check_alpha(alpha)?;

    let c_axis = spec.c.nodes();
    let x_axis = spec.x.nodes();
    let cols = x_axis.len();
    let jobs: Vec<(usize, usize)> = (0..c_axis.len()).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();

    let results: Vec<(usize, usize, Option<Result<f64, String>>)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let out = node_point(spec, c_axis[i], x_axis[j]).map(|pt| {
                PointEvaluator::new(variant, pt, opts)
                    .and_then(|ev| ev.eval(alpha, opts))
                    .map_err(|e| e.to_string())
                    .and_then(|v| if v.is_finite() { Ok(v) } else { Err("non-finite".into()) })
            });
            (i, j, out)
        })
        .collect();

    let mut values = vec![vec![None; cols]; c_axis.len()];
    let mut failed = Vec::new();
    let mut feasible = 0;
    for (i, j, r) in results {
        match r {
            None => {}
            Some(Ok(v)) => {
                feasible += 1;
                values[i][j] = Some(v);
            }
            Some(Err(_)) => {
                feasible += 1;
                failed.push((i, j));
            }
        }
    }
    if feasible == 0 {
        return Err(ManifoldError::InvalidGrid("no feasible node".into()));
    }
    if failed.len() * 100 > feasible {
        return Err(ManifoldError::TooManyFailures { failed: failed.len(), total: feasible });
    }
    Ok(ManifoldGrid { alpha, variant, axis: spec.axis, c_axis, x_axis, values, failed })
}

/// Barrier-composed plain manifold t₀·φ(c, x) ∓ ln(1 − c) on c < 1.
pub fn barrier_manifold(
    alpha: f64,
    t0: f64,
    sign: BarrierSign,
    spec: &GridSpec,
    opts: &BoundOptions,
) -> Result<ManifoldGrid, ManifoldError> {
    build_manifold(alpha, BoundVariant::Barrier { t0, sign }, spec, opts)
}

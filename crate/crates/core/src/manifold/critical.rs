use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::funnel::detect_funnels;
use super::grid::{GridSpec, ManifoldGrid, OverlapAxis};
use super::{BoundOptions, BoundVariant, ManifoldError, PointEvaluator};
use crate::rdt::{ParamPoint, RdtError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalPredicate {
    /// The whole manifold drains to one funnel point.
    SingleFunnel,
    /// The slice x ↦ φ(c, x) has no interior strict local maximum.
    C1CurveMonotone,
}

/// Sampled slice x ↦ φ(c, x) on `points` equispaced nodes of [x_lo, x_hi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub c: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self { c: 1.0, x_lo: 0.0, x_hi: 1.0, points: 200 }
    }
}

impl CurveSpec {
    pub fn xs(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|k| if k + 1 == n { self.x_hi } else { self.x_lo + (self.x_hi - self.x_lo) * k as f64 / (n - 1) as f64 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    pub alpha_critical: f64,
    /// Final bisection interval (predicate false at lo, true at hi).
    pub lo: f64,
    pub hi: f64,
    pub predicate_evaluations: usize,
}

/// True when some interior sample rises above a lower sample on each side by
/// more than `flat_tol` (default 10⁻⁹·(max − min)).
pub fn curve_has_interior_max(values: &[f64], flat_tol: Option<f64>) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let tol = flat_tol.unwrap_or(1e-9 * (hi - lo));
    let mut prefix_min = vec![f64::INFINITY; n];
    for j in 1..n {
        prefix_min[j] = prefix_min[j - 1].min(values[j - 1]);
    }
    let mut suffix_min = f64::INFINITY;
    for j in (1..n - 1).rev() {
        suffix_min = suffix_min.min(values[j + 1]);
        let rise = (values[j] - prefix_min[j]).min(values[j] - suffix_min);
        if rise > tol {
            return true;
        }
    }
    false
}

/// Per-node α-independent state for repeated predicate evaluations.
struct Prepared {
    evaluators: Vec<Option<PointEvaluator>>,
    shape: (Vec<f64>, Vec<f64>, OverlapAxis),
}

fn prepare_curve(variant: BoundVariant, curve: &CurveSpec, opts: &BoundOptions) -> Result<Prepared, ManifoldError> {
    let xs = curve.xs();
    let evaluators: Result<Vec<_>, RdtError> = xs
        .par_iter()
        .map(|&x| {
            let pt = ParamPoint::new(curve.c, x.min(curve.c.sqrt()))?;
            PointEvaluator::new(variant, pt, opts).map(Some)
        })
        .collect();
    Ok(Prepared { evaluators: evaluators?, shape: (vec![curve.c], xs, OverlapAxis::Absolute) })
}

fn prepare_grid(variant: BoundVariant, grid: &GridSpec, opts: &BoundOptions) -> Result<Prepared, ManifoldError> {
    let cs = grid.c.nodes();
    let xs = grid.x.nodes();
    let jobs: Vec<(f64, f64)> = cs.iter().flat_map(|&c| xs.iter().map(move |&x| (c, x))).collect();
    let evaluators: Result<Vec<_>, RdtError> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let pt = match grid.axis {
                OverlapAxis::Absolute => ParamPoint::new(c, s).ok(),
                OverlapAxis::Normalized => ParamPoint::from_rho(c, s).ok(),
            };
            pt.map(|p| PointEvaluator::new(variant, p, opts)).transpose()
        })
        .collect();
    Ok(Prepared { evaluators: evaluators?, shape: (cs, xs, grid.axis) })
}

fn evaluate(prep: &Prepared, alpha: f64, opts: &BoundOptions) -> Result<Vec<Option<f64>>, ManifoldError> {
    let vals: Result<Vec<Option<f64>>, RdtError> = prep
        .evaluators
        .par_iter()
        .map(|e| e.as_ref().map(|e| e.eval(alpha, opts)).transpose())
        .collect();
    Ok(vals?)
}

fn predicate_holds(
    prep: &Prepared,
    variant: BoundVariant,
    predicate: CriticalPredicate,
    alpha: f64,
    opts: &BoundOptions,
) -> Result<bool, ManifoldError> {
    let vals = evaluate(prep, alpha, opts)?;
    match predicate {
        CriticalPredicate::C1CurveMonotone => {
            let v: Vec<f64> = vals.into_iter().flatten().collect();
            Ok(!curve_has_interior_max(&v, None))
        }
        CriticalPredicate::SingleFunnel => {
            let (cs, xs, axis) = &prep.shape;
            let cols = xs.len();
            let values = vals.chunks(cols).map(|r| r.to_vec()).collect();
            let grid = ManifoldGrid {
                alpha,
                variant,
                axis: *axis,
                c_axis: cs.clone(),
                x_axis: xs.clone(),
                values,
                failed: Vec::new(),
            };
            Ok(detect_funnels(&grid, None).count == 1)
        }
    }
}

/// Bisection for the smallest α at which `predicate` holds. The predicate must
/// be false at `bracket.0` and true at `bracket.1`.
pub fn critical_alpha(
    variant: BoundVariant,
    predicate: CriticalPredicate,
    bracket: (f64, f64),
    alpha_tol: f64,
    curve: &CurveSpec,
    grid: &GridSpec,
    opts: &BoundOptions,
) -> Result<CriticalResult, ManifoldError> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) || !(alpha_tol > 0.0) {
        return Err(ManifoldError::BadBracket { lo, hi });
    }
    let prep = match predicate {
        CriticalPredicate::C1CurveMonotone => prepare_curve(variant, curve, opts)?,
        CriticalPredicate::SingleFunnel => prepare_grid(variant, grid, opts)?,
    };
    let mut evals = 2;
    if predicate_holds(&prep, variant, predicate, lo, opts)? || !predicate_holds(&prep, variant, predicate, hi, opts)? {
        return Err(ManifoldError::BadBracket { lo, hi });
    }
    while hi - lo > alpha_tol {
        let mid = 0.5 * (lo + hi);
        evals += 1;
        if predicate_holds(&prep, variant, predicate, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalResult { alpha_critical: 0.5 * (lo + hi), lo, hi, predicate_evaluations: evals })
}

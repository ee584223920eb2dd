//! Grid-plus-golden scalar optimisation and a small Nelder–Mead.

use super::NumericsError;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Coarse scan settings for the scalar optimisers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarOpt {
    pub grid_points: usize,
    /// Scan in log space (bracket must be positive).
    pub log_scale: bool,
    pub max_golden_iters: usize,
}

impl Default for ScalarOpt {
    fn default() -> Self {
        Self { grid_points: 64, log_scale: false, max_golden_iters: 200 }
    }
}

impl ScalarOpt {
    pub fn log() -> Self {
        Self { log_scale: true, ..Self::default() }
    }
}

fn golden_min<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut it = 0;
    while (b - a).abs() > tol && it < max_iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        it += 1;
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimise `f` on `[lo, hi]`: grid scan, then golden-section refinement of the
/// best grid cell. `tol` is measured in the scan coordinate (log space when
/// `opt.log_scale`).
pub fn minimize_scalar_with<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    opt: ScalarOpt,
) -> Result<(f64, f64), NumericsError> {
    if !(lo < hi) || (opt.log_scale && lo <= 0.0) {
        return Err(NumericsError::DegenerateBracket { lo, hi });
    }
    let n = opt.grid_points.max(3);
    let (a, b) = if opt.log_scale { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let map = |s: f64| if opt.log_scale { s.exp() } else { s };
    let mut g = |s: f64| {
        let v = f(map(s));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f64::INFINITY);
    let mut best_k = 0;
    for k in 0..n {
        let s = a + h * k as f64;
        let v = g(s);
        if v < best.1 {
            best = (s, v);
            best_k = k;
        }
    }
    let lo_s = a + h * best_k.saturating_sub(1) as f64;
    let hi_s = a + h * (best_k + 1).min(n - 1) as f64;
    let (s, v) = golden_min(&mut g, lo_s, hi_s, tol, opt.max_golden_iters);
    if v <= best.1 {
        best = (s, v);
    }
    if !best.1.is_finite() {
        return Err(NumericsError::NonFinite("scalar objective not finite on bracket".into()));
    }
    Ok((map(best.0), best.1))
}

/// Minimise on a linear 64-point scan followed by golden refinement.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    f: F,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, f64), NumericsError> {
    minimize_scalar_with(f, bracket.0, bracket.1, tol, ScalarOpt::default())
}

/// Maximise on a linear 64-point scan followed by golden refinement.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    bracket: (f64, f64),
    tol: f64,
) -> Result<(f64, f64), NumericsError> {
    maximize_scalar_with(&mut f, bracket.0, bracket.1, tol, ScalarOpt::default())
}

pub fn maximize_scalar_with<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    opt: ScalarOpt,
) -> Result<(f64, f64), NumericsError> {
    let (x, v) = minimize_scalar_with(|t| -f(t), lo, hi, tol, opt)?;
    Ok((x, -v))
}

/// Nelder–Mead maximisation in two dimensions.
pub fn nelder_mead_max<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    scale: [f64; 2],
    xtol: f64,
    max_iters: usize,
) -> ([f64; 2], f64) {
    let mut g = |p: [f64; 2]| {
        let v = -f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut vals = [g(simplex[0]), g(simplex[1]), g(simplex[2])];
    for _ in 0..max_iters {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        vals = [vals[order[0]], vals[order[1]], vals[order[2]]];

        let size = (1..3)
            .map(|k| (simplex[k][0] - simplex[0][0]).abs().max((simplex[k][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if size <= xtol {
            break;
        }
        let cen = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| [cen[0] + t * (simplex[2][0] - cen[0]), cen[1] + t * (simplex[2][1] - cen[1])];
        let xr = along(-1.0);
        let fr = g(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = g(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let p = along(-0.5);
                (p, g(p))
            } else {
                let p = along(0.5);
                (p, g(p))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = g(simplex[k]);
                }
            }
        }
    }
    let k = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    (simplex[k], -vals[k])
}

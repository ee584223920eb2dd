//! Bounds for the intensity (squared-magnitude) objective.
//!
//! The inner problem min_{z ≥ 0} (g₀² − z²)² + (|v| − z)² r_y has no closed-form
//! expectation, so every bound here is a 2-D Gaussian expectation evaluated by
//! nested adaptive quadrature. Whole families (over r_y, or over (c₃, r̄_y))
//! are integrated at once as vector-valued integrands and then interpolated.

use serde::{Deserialize, Serialize};

use super::lifted::{gamma_sph_hat, sphere_term, LiftParams, LiftedBoundResult};
use super::{check_alpha, ParamPoint, RdtError};
use crate::numerics::cubic::cubic_real_nonneg_roots;
use crate::numerics::optimize::{maximize_scalar_with, minimize_scalar_with, nelder_mead_max, ScalarOpt};
use crate::numerics::quadrature::{gauss_breaks, integrate_vec, normal_pdf, GaussDomain, QuadratureSpec};
use crate::numerics::spline::UniformSpline;
use crate::numerics::NumericsError;

/// Minimiser and minimum of (g₀² − z²)² + (|v| − z)²·r_y over z ≥ 0.
pub fn inner_min_sq(g0: f64, v: f64, r_y: f64) -> (f64, f64) {
    let g2 = g0 * g0;
    let av = v.abs();
    let p_c = (r_y - 2.0 * g2) / 2.0;
    let q_c = -(r_y / 2.0) * av;
    let obj = |z: f64| {
        let a = g2 - z * z;
        let b = av - z;
        a * a + b * b * r_y
    };
    let mut best = (0.0, obj(0.0));
    for &z in cubic_real_nonneg_roots(p_c, q_c).as_slice() {
        let val = obj(z);
        if val < best.1 {
            best = (z, val);
        }
    }
    best
}

/// E over iid (g₀, g₁) of a vector integrand `f(g₀, v, out)` with v = g₀x + g₁r.
/// Uses the symmetry (g₀, g₁) → (−g₀, −g₁), under which |v| and g₀² are invariant.
fn expect2d_vec<F>(pt: &ParamPoint, dim: usize, quad: &QuadratureSpec, mut f: F) -> Result<Vec<f64>, RdtError>
where
    F: FnMut(f64, f64, &mut [f64]),
{
    quad.validate()?;
    let radius = quad.truncation_radius;
    let outer_breaks = gauss_breaks(GaussDomain::HalfLine, radius);
    let base_inner = gauss_breaks(GaussDomain::FullLine, radius);
    let inner_abs = 0.1 * quad.abs_tol;
    let mut failure: Option<NumericsError> = None;
    let (x, r) = (pt.x, pt.r);

    let (total, _) = integrate_vec(
        |g0, out| {
            let w0 = 2.0 * normal_pdf(g0);
            if w0 == 0.0 || failure.is_some() {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            if r == 0.0 {
                f(g0, g0 * x, out);
                out.iter_mut().for_each(|o| *o *= w0);
                return;
            }
            // the integrand has a kink where v changes sign
            let kink = -g0 * x / r;
            let mut breaks = base_inner.clone();
            if kink > -radius && kink < radius && !breaks.contains(&kink) {
                breaks.push(kink);
                breaks.sort_by(f64::total_cmp);
            }
            let inner = integrate_vec(
                |g1, o| {
                    let w1 = normal_pdf(g1);
                    if w1 == 0.0 {
                        o.iter_mut().for_each(|v| *v = 0.0);
                    } else {
                        f(g0, g0 * x + g1 * r, o);
                        o.iter_mut().for_each(|v| *v *= w1);
                    }
                },
                &breaks,
                dim,
                inner_abs,
                quad.rel_tol,
                quad.max_subdivisions,
            );
            match inner {
                Ok((vals, _)) => {
                    for (o, v) in out.iter_mut().zip(vals) {
                        *o = w0 * v;
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
            }
        },
        &outer_breaks,
        dim,
        quad.abs_tol,
        quad.rel_tol,
        quad.max_subdivisions,
    )?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(total)
}

/// E min_z [(g₀² − z²)² + (|v| − z)² r_y].
pub fn f_q_sq(pt: &ParamPoint, r_y: f64, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    if !(r_y > 0.0) {
        return Err(RdtError::InvalidParameter(format!("r_y = {r_y}")));
    }
    let v = expect2d_vec(pt, 1, quad, |g0, v, o| o[0] = inner_min_sq(g0, v, r_y).1)?;
    Ok(v[0].max(0.0))
}

/// E exp(−c₃ · min_z [(g₀² − z²)² + (|v| − z)² r̄_y]).
pub fn f_q_sq_lift(pt: &ParamPoint, c3: f64, r_y_bar: f64, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    if !(c3 > 0.0) || !(r_y_bar > 0.0) {
        return Err(RdtError::InvalidParameter(format!("c3 = {c3}, r_y_bar = {r_y_bar}")));
    }
    let v = expect2d_vec(pt, 1, quad, |g0, v, o| o[0] = (-c3 * inner_min_sq(g0, v, r_y_bar).1).exp())?;
    Ok(v[0].clamp(0.0, 1.0))
}

/// Log-spaced node set used for the tabulations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl LogGrid {
    fn step(&self) -> f64 {
        (self.hi.ln() - self.lo.ln()) / (self.nodes - 1) as f64
    }

    fn at(&self, k: usize) -> f64 {
        (self.lo.ln() + self.step() * k as f64).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquaredOptions {
    /// Nodes in r_y for the plain table.
    pub r_grid: LogGrid,
    /// Nodes in r̄_y for the lifted table.
    pub r_bar_grid: LogGrid,
    /// Nodes in c₃ for the lifted table.
    pub c3_grid: LogGrid,
    pub outer_grid: usize,
    pub r_y_range: (f64, f64),
    pub nm_max_iters: usize,
    /// Quadrature tolerances for the tabulated families (absolute, relative).
    pub table_tol: (f64, f64),
}

impl Default for SquaredOptions {
    fn default() -> Self {
        Self {
            r_grid: LogGrid { lo: 1e-4, hi: 1e6, nodes: 81 },
            r_bar_grid: LogGrid { lo: 1e-4, hi: 1e6, nodes: 41 },
            c3_grid: LogGrid { lo: 1e-2, hi: 1e3, nodes: 25 },
            outer_grid: 24,
            r_y_range: (1e-4, 1e3),
            nm_max_iters: 1000,
            table_tol: (1e-7, 1e-7),
        }
    }
}

impl SquaredOptions {
    fn validate(&self) -> Result<(), RdtError> {
        let g = |g: &LogGrid| g.lo > 0.0 && g.hi > g.lo && g.nodes >= 8;
        let ok = g(&self.r_grid)
            && g(&self.r_bar_grid)
            && g(&self.c3_grid)
            && self.outer_grid >= 4
            && self.r_y_range.0 > 0.0
            && self.r_y_range.1 > self.r_y_range.0
            && self.table_tol.0 > 0.0
            && self.table_tol.1 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(RdtError::InvalidParameter(format!("squared options {self:?}")))
        }
    }
}

/// Plain squared bound: max over r_y of α f_q_sq(r_y) − r² r_y.
pub fn phi0_sq(alpha: f64, pt: &ParamPoint, quad: &QuadratureSpec, opt_tol: f64) -> Result<f64, RdtError> {
    phi0_sq_with(alpha, pt, quad, opt_tol, &SquaredOptions::default()).map(|(v, _)| v)
}

/// Table of f_q_sq over the r_y grid, spline-interpolated in ln r_y.
#[derive(Clone, Debug)]
pub struct SquaredProfile {
    pub pt: ParamPoint,
    grid: LogGrid,
    spline: UniformSpline,
}

impl SquaredProfile {
    pub fn new(pt: ParamPoint, quad: &QuadratureSpec, opts: &SquaredOptions) -> Result<Self, RdtError> {
        opts.validate()?;
        let grid = opts.r_grid;
        let nodes: Vec<f64> = (0..grid.nodes).map(|k| grid.at(k)).collect();
        let tq = quad.with_tolerances(opts.table_tol.0, opts.table_tol.1);
        let vals = expect2d_vec(&pt, grid.nodes, &tq, |g0, v, o| {
            for (slot, &ry) in o.iter_mut().zip(&nodes) {
                *slot = inner_min_sq(g0, v, ry).1;
            }
        })?;
        let spline = UniformSpline::new(grid.lo.ln(), grid.step(), vals)?;
        Ok(Self { pt, grid, spline })
    }

    pub fn f_q_sq(&self, r_y: f64) -> f64 {
        self.spline.eval(r_y.ln()).max(0.0)
    }

    /// (bound, argmax r_y); the value at the argmax is recomputed exactly.
    pub fn bound(&self, alpha: f64, quad: &QuadratureSpec, opt_tol: f64) -> Result<(f64, f64), RdtError> {
        check_alpha(alpha)?;
        let r2 = self.pt.r * self.pt.r;
        if self.pt.r == 0.0 {
            // no penalty on r_y: the supremum is the r_y → ∞ limit E (g₀² − v²)²
            let v = expect2d_vec(&self.pt, 1, quad, |g0, v, o| o[0] = (g0 * g0 - v * v).powi(2))?;
            return Ok((alpha * v[0], f64::INFINITY));
        }
        let opt = ScalarOpt { grid_points: 4 * self.grid.nodes, ..ScalarOpt::log() };
        let (ry, _) = maximize_scalar_with(
            |ry| alpha * self.f_q_sq(ry) - r2 * ry,
            self.grid.lo,
            self.grid.hi,
            opt_tol.max(1e-12),
            opt,
        )?;
        let exact = alpha * f_q_sq(&self.pt, ry, quad)? - r2 * ry;
        // r_y → 0 gives 0
        Ok((exact.max(0.0), ry))
    }
}

pub fn phi0_sq_with(
    alpha: f64,
    pt: &ParamPoint,
    quad: &QuadratureSpec,
    opt_tol: f64,
    opts: &SquaredOptions,
) -> Result<(f64, f64), RdtError> {
    check_alpha(alpha)?;
    SquaredProfile::new(*pt, quad, opts)?.bound(alpha, quad, opt_tol)
}

/// Tabulated L(c₃, r̄) = −ln f^(sq,lift)(c₃, r̄)/c₃ for one (c, x).
#[derive(Clone, Debug)]
pub struct SquaredLiftedProfile {
    pub pt: ParamPoint,
    c3_grid: LogGrid,
    r_grid: LogGrid,
    /// One spline in ln c₃ per r̄ node; the last entry is the r̄ → ∞ column.
    by_r: Vec<UniformSpline>,
}

impl SquaredLiftedProfile {
    pub fn new(pt: ParamPoint, quad: &QuadratureSpec, opts: &SquaredOptions) -> Result<Self, RdtError> {
        opts.validate()?;
        let (cg, rg) = (opts.c3_grid, opts.r_bar_grid);
        let c3s: Vec<f64> = (0..cg.nodes).map(|k| cg.at(k)).collect();
        let rs: Vec<f64> = (0..rg.nodes).map(|k| rg.at(k)).collect();
        let nr = rg.nodes + 1;
        let dim = nr * cg.nodes;
        // the c₃ sweep at fixed r̄ reuses a single inner minimum
        let tq = quad.with_tolerances(opts.table_tol.0, opts.table_tol.1);
        let vals = expect2d_vec(&pt, dim, &tq, |g0, v, o| {
            for k in 0..nr {
                let qv = if k < rg.nodes {
                    inner_min_sq(g0, v, rs[k]).1
                } else {
                    (g0 * g0 - v * v).powi(2)
                };
                let row = &mut o[k * cg.nodes..(k + 1) * cg.nodes];
                for (slot, &c3) in row.iter_mut().zip(&c3s) {
                    *slot = (-c3 * qv).exp();
                }
            }
        })?;
        let mut by_r = Vec::with_capacity(nr);
        for k in 0..nr {
            let col: Vec<f64> = (0..cg.nodes)
                .map(|j| {
                    let f = vals[k * cg.nodes + j].clamp(f64::MIN_POSITIVE, 1.0);
                    -f.ln() / c3s[j]
                })
                .collect();
            by_r.push(UniformSpline::new(cg.lo.ln(), cg.step(), col)?);
        }
        Ok(Self { pt, c3_grid: cg, r_grid: rg, by_r })
    }

    /// min over r̄ (equivalently γ) of r_y²/(4r̄) + α L(c₃, r̄); returns (value, r̄*).
    fn inner_min(&self, alpha: f64, c3: f64, r_y: f64) -> (f64, f64) {
        let lc = c3.ln();
        let col: Vec<f64> = self.by_r[..self.r_grid.nodes].iter().map(|s| s.eval(lc)).collect();
        let at_inf = alpha * self.by_r[self.r_grid.nodes].eval(lc);
        let spline = match UniformSpline::new(self.r_grid.lo.ln(), self.r_grid.step(), col) {
            Ok(s) => s,
            Err(_) => return (f64::INFINITY, 1.0),
        };
        let ry2 = r_y * r_y / 4.0;
        let opt = ScalarOpt { grid_points: 3 * self.r_grid.nodes, ..ScalarOpt::default() };
        let lo = self.r_grid.lo.ln();
        let hi = self.r_grid.hi.ln();
        let (s, v) = minimize_scalar_with(|s| ry2 * (-s).exp() + alpha * spline.eval(s), lo, hi, 1e-9, opt)
            .unwrap_or((hi, f64::INFINITY));
        if at_inf < v {
            (at_inf, f64::INFINITY)
        } else {
            (v, s.exp())
        }
    }

    fn objective(&self, alpha: f64, c3: f64, r_y: f64) -> (f64, f64) {
        let r = self.pt.r;
        let (v, rbar) = self.inner_min(alpha, c3, r_y);
        (v + 0.5 * c3 * r * r * r_y * r_y + sphere_term(c3, r_y, r), rbar)
    }

    pub fn bound(&self, alpha: f64, opt_tol: f64, opts: &SquaredOptions) -> Result<LiftedBoundResult, RdtError> {
        check_alpha(alpha)?;
        let (lc0, lc1) = (self.c3_grid.lo.ln(), self.c3_grid.hi.ln());
        let (lr0, lr1) = (opts.r_y_range.0.ln(), opts.r_y_range.1.ln());
        let k = opts.outer_grid;
        let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;
        let mut best = (f64::NEG_INFINITY, [lc0, lr0]);
        for i in 0..k {
            for j in 0..k {
                let p = [at(lc0, lc1, i), at(lr0, lr1, j)];
                let v = self.objective(alpha, p[0].exp(), p[1].exp()).0;
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        let clamp = |p: [f64; 2]| [p[0].clamp(lc0, lc1), p[1].clamp(lr0, lr1)];
        let cell = [(lc1 - lc0) / (k - 1) as f64, (lr1 - lr0) / (k - 1) as f64];
        let (p, _) = nelder_mead_max(
            |p| {
                let p = clamp(p);
                self.objective(alpha, p[0].exp(), p[1].exp()).0
            },
            best.1,
            [0.5 * cell[0], 0.5 * cell[1]],
            opt_tol.max(1e-10),
            opts.nm_max_iters,
        );
        let p = clamp(p);
        let (c3, r_y) = (p[0].exp(), p[1].exp());
        let (value, rbar) = self.objective(alpha, c3, r_y);
        if !value.is_finite() {
            return Err(NumericsError::NonFinite("squared lifted objective".into()).into());
        }
        let gamma_x = if rbar.is_finite() { rbar / (1.0 + rbar) } else { 1.0 };
        let params = LiftParams {
            c3,
            r_y,
            gamma: r_y * r_y / (4.0 * rbar),
            r_y_bar: rbar,
            gamma_x,
            c3e: c3 * r_y * self.pt.r,
        };
        Ok(LiftedBoundResult {
            phi0_bar: value.max(0.0),
            best: Some(params),
            gamma_sph_hat: gamma_sph_hat(params.c3e),
        })
    }
}

/// Lifted squared bound with the default tabulation.
pub fn phi0_sq_lifted(
    alpha: f64,
    pt: &ParamPoint,
    quad: &QuadratureSpec,
    opt_tol: f64,
) -> Result<LiftedBoundResult, RdtError> {
    check_alpha(alpha)?;
    if pt.r == 0.0 {
        let v = phi0_sq(alpha, pt, quad, opt_tol)?;
        return Ok(LiftedBoundResult { phi0_bar: v, best: None, gamma_sph_hat: 0.5 });
    }
    let opts = SquaredOptions::default();
    SquaredLiftedProfile::new(*pt, quad, &opts)?.bound(alpha, opt_tol, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussianSampler;
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn scan(g0: f64, v: f64, ry: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut k = 0u32;
        while k <= 1_000_000 {
            let z = k as f64 * 1e-5;
            let val = (g0 * g0 - z * z).powi(2) + (v.abs() - z).powi(2) * ry;
            best = best.min(val);
            k += 1;
        }
        best
    }

    #[test]
    fn inner_trivial_cases() {
        for ry in [0.1, 1.0, 10.0] {
            let (z, v) = inner_min_sq(1.0, 1.0, ry);
            assert!((z - 1.0).abs() < 1e-12 && v.abs() < 1e-20);
            assert_eq!(inner_min_sq(0.0, 0.0, ry), (0.0, 0.0));
        }
    }

    #[test]
    fn inner_matches_scan() {
        let (_, v) = inner_min_sq(1.3, 0.4, 2.0);
        assert!((v - scan(1.3, 0.4, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn f_q_sq_corner_and_monotone() {
        let corner = ParamPoint::new(1.0, 1.0).unwrap();
        assert!(f_q_sq(&corner, 3.0, &q()).unwrap().abs() < 1e-12);
        let p = ParamPoint::new(1.0, 0.3).unwrap();
        let vals: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&ry| f_q_sq(&p, ry, &q()).unwrap()).collect();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2], "{vals:?}");
    }

    fn mc<F: Fn(f64, f64) -> f64>(pt: &ParamPoint, n: usize, seed: u64, f: F) -> (f64, f64) {
        let mut s = GaussianSampler::new(seed);
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (g0, g1) = (s.sample(), s.sample());
            let val = f(g0, g0 * pt.x + g1 * pt.r);
            m1 += val;
            m2 += val * val;
        }
        let mean = m1 / n as f64;
        (mean, ((m2 / n as f64 - mean * mean) / n as f64).sqrt())
    }

    #[test]
    fn f_q_sq_monte_carlo() {
        let p = ParamPoint::new(1.0, 0.0).unwrap();
        let (mean, se) = mc(&p, 1_000_000, 21, |g0, v| inner_min_sq(g0, v, 1.0).1);
        let v = f_q_sq(&p, 1.0, &q()).unwrap();
        assert!((v - mean).abs() < 4.0 * se + 1e-12, "{v} vs {mean} ± {se}");
    }

    #[test]
    fn f_q_sq_lift_monte_carlo() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        let (mean, se) = mc(&p, 1_000_000, 22, |g0, v| (-inner_min_sq(g0, v, 0.5).1).exp());
        let v = f_q_sq_lift(&p, 1.0, 0.5, &q()).unwrap();
        assert!(v > 0.0 && v <= 1.0);
        assert!((v - mean).abs() < 4.0 * se, "{v} vs {mean} ± {se}");
    }

    #[test]
    fn profile_spline_matches_direct_quadrature() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        let prof = SquaredProfile::new(p, &q(), &SquaredOptions::default()).unwrap();
        for ry in [0.01, 0.37, 2.0, 40.0] {
            let d = f_q_sq(&p, ry, &q()).unwrap();
            assert!((prof.f_q_sq(ry) - d).abs() < 1e-5 * d.max(1e-3), "ry = {ry}");
        }
    }

    #[test]
    fn squared_bounds_at_corner_and_midpoint() {
        let corner = ParamPoint::new(1.0, 1.0).unwrap();
        assert!(phi0_sq(1.4, &corner, &q(), 1e-8).unwrap().abs() < 1e-10);
        let mid = ParamPoint::new(1.0, 0.5).unwrap();
        let plain = phi0_sq(1.4, &mid, &q(), 1e-8).unwrap();
        assert!(plain.is_finite() && plain > 0.0);
        let hi = phi0_sq(1.6, &mid, &q(), 1e-8).unwrap();
        assert!(hi >= plain);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn inner_is_global_min(g0 in -3.0f64..3.0, v in -3.0f64..3.0, ry in 0.01f64..10.0) {
            let (z, val) = inner_min_sq(g0, v, ry);
            prop_assert!(z >= 0.0 && val >= 0.0);
            // never beaten by a coarse probe
            for k in 0..=400 {
                let w = k as f64 * 0.01;
                let probe = (g0 * g0 - w * w).powi(2) + (v.abs() - w).powi(2) * ry;
                prop_assert!(val <= probe + 1e-12);
            }
        }
    }
}

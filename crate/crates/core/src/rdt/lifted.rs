//! Partially lifted bound for the magnitude objective.
//!
//! The inner expectation F(t) = E exp(−t(|g₀| − |g₀x + g₁r|)²) depends on the
//! lifting parameters only through t = c₃γₓ. A [`LiftedProfile`] tabulates
//! m(t) = −ln F(t)/t once per (c, x) so that the nested max–max–min can be
//! scanned cheaply; the reported optimum is re-evaluated with the exact F.

use serde::{Deserialize, Serialize};

use super::plain::{f_q_closed, phi0_plain};
use super::{check_alpha, ParamPoint, RdtError};
use crate::numerics::optimize::{minimize_scalar_with, nelder_mead_max, ScalarOpt};
use crate::numerics::quadrature::{gauss_weighted_integral, GaussDomain, QuadratureSpec};
use crate::numerics::spline::UniformSpline;
use crate::numerics::{erfc, NumericsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftParams {
    pub c3: f64,
    pub r_y: f64,
    pub gamma: f64,
    /// r_y²/(4γ)
    pub r_y_bar: f64,
    /// r̄_y/(1 + r̄_y)
    pub gamma_x: f64,
    /// c₃·r_y·r
    pub c3e: f64,
}

impl LiftParams {
    /// Parameters from (c₃, r_y, γₓ) at orthogonal radius `r`.
    pub fn from_gamma_x(c3: f64, r_y: f64, gamma_x: f64, r: f64) -> Self {
        let r_y_bar = gamma_x / (1.0 - gamma_x);
        Self {
            c3,
            r_y,
            gamma: r_y * r_y / (4.0 * r_y_bar),
            r_y_bar,
            gamma_x,
            c3e: c3 * r_y * r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedBoundResult {
    pub phi0_bar: f64,
    /// Optimising arguments; `None` at r = 0 where the bound reduces to the plain one.
    pub best: Option<LiftParams>,
    pub gamma_sph_hat: f64,
}

/// Optimiser budget for the nested lifted problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedOptions {
    /// Below this t the profile is interpolated linearly from m(0) = f_q.
    pub table_t_min: f64,
    pub table_t_max: f64,
    pub table_nodes: usize,
    pub c3_range: (f64, f64),
    pub r_y_range: (f64, f64),
    pub outer_grid: usize,
    /// Inner scan over z = logit(γₓ) on [−z_max, z_max].
    pub inner_z_max: f64,
    pub inner_grid: usize,
    pub nm_max_iters: usize,
    /// Re-evaluate the inner minimum at the optimum with the exact F.
    pub polish: bool,
}

impl Default for LiftedOptions {
    fn default() -> Self {
        Self {
            table_t_min: 1e-5,
            table_t_max: 2e3,
            table_nodes: 1000,
            c3_range: (1e-3, 1e3),
            r_y_range: (1e-3, 1e3),
            outer_grid: 32,
            inner_z_max: 25.0,
            inner_grid: 161,
            nm_max_iters: 2000,
            polish: true,
        }
    }
}

impl LiftedOptions {
    /// Smaller scans for large manifold grids.
    pub fn coarse() -> Self {
        Self { table_nodes: 600, outer_grid: 20, inner_grid: 101, ..Self::default() }
    }

    fn validate(&self) -> Result<(), RdtError> {
        let ok = self.table_t_min > 0.0
            && self.table_t_max > self.table_t_min
            && self.table_nodes >= 16
            && self.c3_range.0 > 0.0
            && self.c3_range.1 > self.c3_range.0
            && self.table_t_max >= self.c3_range.1
            && self.r_y_range.0 > 0.0
            && self.r_y_range.1 > self.r_y_range.0
            && self.outer_grid >= 4
            && self.inner_z_max > 0.0
            && self.inner_grid >= 64;
        if ok {
            Ok(())
        } else {
            Err(RdtError::InvalidParameter(format!("lifted options {self:?}")))
        }
    }
}

/// Closed-form optimum of the spherical auxiliary problem.
#[inline]
pub fn gamma_sph_hat(c3e: f64) -> f64 {
    (c3e + (c3e * c3e + 4.0).sqrt()) / 4.0
}

/// −r r_y γ̂_sph + (1/(2c₃))·ln(1 − c₃e/(2γ̂_sph)).
/// The log argument equals 1/(4γ̂²), which is how it is evaluated.
#[inline]
pub fn sphere_term(c3: f64, r_y: f64, r: f64) -> f64 {
    let c3e = c3 * r_y * r;
    let s = gamma_sph_hat(c3e);
    -r * r_y * s - (2.0 * s).ln() / c3
}

/// E over g₁ of exp(−t(|g| − |g x + g₁ r|)²) for g ≥ 0, r > 0.
#[inline]
fn lift_inner(t: f64, x: f64, r: f64, g: f64) -> f64 {
    let cc = 1.0 + 2.0 * t * r * r;
    let sq = (2.0 * cc).sqrt();
    let b = -g * x / r;
    let a1 = 2.0 * t * r * g * (x - 1.0);
    let a2 = 2.0 * t * r * g * (1.0 + x);
    let e1 = -t * g * g * (1.0 - x) * (1.0 - x) / cc;
    let e2 = -t * g * g * (1.0 + x) * (1.0 + x) / cc;
    let pre = 0.5 / cc.sqrt();
    pre * (e1.exp() * erfc((a1 + cc * b) / sq) + e2.exp() * erfc(-(a2 + cc * b) / sq))
}

fn lift_expectation(pt: &ParamPoint, t: f64, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    if pt.r == 0.0 {
        let d = 1.0 - pt.x;
        return Ok((1.0 + 2.0 * t * d * d).powf(-0.5));
    }
    let half = gauss_weighted_integral(|g| lift_inner(t, pt.x, pt.r, g), GaussDomain::HalfLine, quad)?;
    Ok((2.0 * half).min(1.0))
}

/// E exp(−c₃γₓ(|g₀| − |g₀x + g₁r|)²).
pub fn f_q_lift(pt: &ParamPoint, c3: f64, gamma_x: f64, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    if !(c3 > 0.0) || !(gamma_x > 0.0 && gamma_x < 1.0) {
        return Err(RdtError::InvalidParameter(format!("c3 = {c3}, gamma_x = {gamma_x}")));
    }
    lift_expectation(pt, c3 * gamma_x, quad)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Tabulated m(t) = −ln F(t)/t for one (c, x).
#[derive(Clone, Debug)]
pub struct LiftedProfile {
    pub pt: ParamPoint,
    pub f_q: f64,
    quad: QuadratureSpec,
    tight: QuadratureSpec,
    t_lo: f64,
    m_lo: f64,
    spline: UniformSpline,
}

impl LiftedProfile {
    pub fn new(pt: ParamPoint, quad: &QuadratureSpec, opts: &LiftedOptions) -> Result<Self, RdtError> {
        quad.validate()?;
        opts.validate()?;
        let f_q = f_q_closed(&pt, quad)?;
        // m(t) is recovered from ln F, so F itself must be near machine precision
        let tight = QuadratureSpec { max_subdivisions: quad.max_subdivisions.max(2000), ..*quad }
            .with_tolerances(1e-15, 1e-15);
        let (s0, s1) = (opts.table_t_min.ln(), opts.table_t_max.ln());
        let n = opts.table_nodes;
        let h = (s1 - s0) / (n - 1) as f64;
        let mut y = Vec::with_capacity(n);
        for k in 0..n {
            let t = (s0 + h * k as f64).exp();
            y.push(m_exact(&pt, t, &tight)?);
        }
        let m_lo = y[0];
        let spline = UniformSpline::new(s0, h, y)?;
        Ok(Self { pt, f_q, quad: *quad, tight, t_lo: opts.table_t_min, m_lo, spline })
    }

    /// Interpolated m(t).
    #[inline]
    pub fn m(&self, t: f64) -> f64 {
        if t <= self.t_lo {
            self.f_q + (self.m_lo - self.f_q) * (t / self.t_lo)
        } else {
            self.spline.eval(t.ln())
        }
    }

    /// m(t) from a fresh quadrature.
    pub fn m_exact(&self, t: f64) -> Result<f64, RdtError> {
        if t <= self.t_lo {
            return Ok(self.m(t));
        }
        m_exact(&self.pt, t, &self.tight)
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// γ + (α/c₃)(−ln F(c₃γₓ)) in the logit coordinate z = logit(γₓ).
    #[inline]
    fn inner_obj(&self, alpha: f64, c3: f64, r_y: f64, z: f64, mut m: impl FnMut(f64) -> f64) -> f64 {
        let u = sigmoid(z);
        r_y * r_y * (-z).exp() / 4.0 + alpha * u * m(c3 * u)
    }

    fn outer_constant(&self, c3: f64, r_y: f64) -> f64 {
        let r = self.pt.r;
        0.5 * c3 * r * r * r_y * r_y + sphere_term(c3, r_y, r)
    }

    /// min over γ for fixed (c₃, r_y), using the table; returns (value, z*).
    fn inner_min(&self, alpha: f64, c3: f64, r_y: f64, opts: &LiftedOptions, tol: f64) -> (f64, f64) {
        let zmax = opts.inner_z_max;
        let opt = ScalarOpt { grid_points: opts.inner_grid, ..ScalarOpt::default() };
        let (z, v) = minimize_scalar_with(
            |z| self.inner_obj(alpha, c3, r_y, z, |t| self.m(t)),
            -zmax,
            zmax,
            tol,
            opt,
        )
        .unwrap_or((zmax, f64::INFINITY));
        (v + self.outer_constant(c3, r_y), z)
    }

    /// Same as `inner_min` with the exact F, refined around a table optimum `z0`.
    fn inner_min_exact(
        &self,
        alpha: f64,
        c3: f64,
        r_y: f64,
        z0: f64,
        tol: f64,
    ) -> Result<(f64, f64), RdtError> {
        let mut err: Option<RdtError> = None;
        let opt = ScalarOpt { grid_points: 9, ..ScalarOpt::default() };
        let (z, v) = minimize_scalar_with(
            |z| {
                self.inner_obj(alpha, c3, r_y, z, |t| match self.m_exact(t) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                })
            },
            z0 - 1.0,
            z0 + 1.0,
            tol,
            opt,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok((v + self.outer_constant(c3, r_y), z))
    }

    /// Lifted bound at level α.
    pub fn bound(&self, alpha: f64, opt_tol: f64, opts: &LiftedOptions) -> Result<LiftedBoundResult, RdtError> {
        check_alpha(alpha)?;
        if self.pt.r == 0.0 {
            let p = phi0_plain(alpha, &self.pt, &self.quad)?;
            return Ok(LiftedBoundResult { phi0_bar: p.phi0, best: None, gamma_sph_hat: 0.5 });
        }
        let tol = opt_tol.max(1e-12);
        let (lc0, lc1) = (opts.c3_range.0.ln(), opts.c3_range.1.ln());
        let (lr0, lr1) = (opts.r_y_range.0.ln(), opts.r_y_range.1.ln());
        let k = opts.outer_grid;
        let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;

        let mut best = (f64::NEG_INFINITY, [lc0, lr0]);
        for i in 0..k {
            for j in 0..k {
                let p = [step(lc0, lc1, i), step(lr0, lr1, j)];
                let v = self.inner_min(alpha, p[0].exp(), p[1].exp(), opts, 1e-3).0;
                if v > best.0 {
                    best = (v, p);
                }
            }
        }
        let cell = [(lc1 - lc0) / (k - 1) as f64, (lr1 - lr0) / (k - 1) as f64];
        let clamp = |p: [f64; 2]| [p[0].clamp(lc0, lc1), p[1].clamp(lr0, lr1)];
        let (p, v_nm) = nelder_mead_max(
            |p| {
                let p = clamp(p);
                self.inner_min(alpha, p[0].exp(), p[1].exp(), opts, tol).0
            },
            best.1,
            [0.5 * cell[0], 0.5 * cell[1]],
            tol,
            opts.nm_max_iters,
        );
        let p = clamp(p);
        let (c3, r_y) = (p[0].exp(), p[1].exp());
        let (mut value, mut z) = self.inner_min(alpha, c3, r_y, opts, tol);
        if !value.is_finite() || !v_nm.is_finite() {
            return Err(NumericsError::NonFinite("lifted objective".into()).into());
        }
        if opts.polish {
            let (v, zz) = self.inner_min_exact(alpha, c3, r_y, z, tol)?;
            value = v;
            z = zz;
        }
        let params = LiftParams::from_gamma_x(c3, r_y, sigmoid(z), self.pt.r);
        // r_y → 0 drives the objective to 0, so the supremum is never negative
        Ok(LiftedBoundResult {
            phi0_bar: value.max(0.0),
            best: Some(params),
            gamma_sph_hat: gamma_sph_hat(params.c3e),
        })
    }

    /// max over r_y of the inner minimum at fixed c₃ (exposed for diagnostics).
    pub fn r_y_profile(&self, alpha: f64, c3: f64, r_y: f64, opts: &LiftedOptions) -> f64 {
        self.inner_min(alpha, c3, r_y, opts, 1e-10).0
    }
}

fn m_exact(pt: &ParamPoint, t: f64, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    let f = lift_expectation(pt, t, quad)?;
    Ok(-f.ln() / t)
}

/// Lifted bound φ̄₀(α; c, x) with the default optimiser budget.
pub fn phi0_lifted(
    alpha: f64,
    pt: &ParamPoint,
    quad: &QuadratureSpec,
    opt_tol: f64,
) -> Result<LiftedBoundResult, RdtError> {
    check_alpha(alpha)?;
    let opts = LiftedOptions::default();
    if pt.r == 0.0 {
        let p = phi0_plain(alpha, pt, quad)?;
        return Ok(LiftedBoundResult { phi0_bar: p.phi0, best: None, gamma_sph_hat: 0.5 });
    }
    LiftedProfile::new(*pt, quad, &opts)?.bound(alpha, opt_tol, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::optimize::maximize_scalar;
    use crate::numerics::GaussianSampler;
    use crate::rdt::plain::phi0_plain;
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn sphere_optimum_formula() {
        assert_eq!(gamma_sph_hat(0.0), 0.5);
        assert!((gamma_sph_hat(2.0) - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
        for c3e in [0.0, 1e-6, 0.3, 2.0, 50.0, 1e6] {
            let s = gamma_sph_hat(c3e);
            let arg = 1.0 - c3e / (2.0 * s);
            assert!(arg > 0.0 && arg <= 1.0);
            assert!((arg - 1.0 / (4.0 * s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_term_reduces_to_plain_dual_term() {
        // as c₃ → 0 the spherical part tends to −r r_y
        let (r, ry) = (0.7, 0.4);
        assert!((sphere_term(1e-7, ry, r) + r * ry).abs() < 1e-7);
    }

    #[test]
    fn f_q_lift_limits() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        assert!((f_q_lift(&p, 1e-9, 0.5, &q()).unwrap() - 1.0).abs() < 1e-9);
        let corner = ParamPoint::new(1.0, 1.0).unwrap();
        assert_eq!(f_q_lift(&corner, 7.0, 0.3, &q()).unwrap(), 1.0);
    }

    #[test]
    fn f_q_lift_monte_carlo() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        let t = 2.0 * 0.5;
        let n = 2_000_000;
        let mut s = GaussianSampler::new(9);
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (g0, g1) = (s.sample(), s.sample());
            let d = g0.abs() - (g0 * p.x + g1 * p.r).abs();
            let e = (-t * d * d).exp();
            m1 += e;
            m2 += e * e;
        }
        let mean = m1 / n as f64;
        let se = ((m2 / n as f64 - mean * mean) / n as f64).sqrt();
        let v = f_q_lift(&p, 2.0, 0.5, &q()).unwrap();
        assert!((v - mean).abs() < 4.0 * se, "{v} vs {mean} ± {se}");
    }

    #[test]
    fn small_t_slope_is_plain_expectation() {
        let p = ParamPoint::new(0.8, 0.3).unwrap();
        let prof = LiftedProfile::new(p, &q(), &LiftedOptions::default()).unwrap();
        let fq = f_q_closed(&p, &q()).unwrap();
        assert!((prof.m(1e-5) - fq).abs() < 1e-4);
        assert!((prof.m(0.0) - fq).abs() < 1e-15);
        // spline agrees with fresh quadrature between knots
        for t in [3e-4, 0.02, 0.7, 13.0, 450.0] {
            assert!((prof.m(t) - prof.m_exact(t).unwrap()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn lifted_at_least_plain_at_midpoint() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        let lifted = phi0_lifted(1.4, &p, &q(), 1e-8).unwrap();
        let plain = phi0_plain(1.4, &p, &q()).unwrap().phi0;
        assert!(lifted.phi0_bar >= plain - 1e-6, "{} < {plain}", lifted.phi0_bar);
        let best = lifted.best.unwrap();
        assert!((lifted.gamma_sph_hat - gamma_sph_hat(best.c3e)).abs() < 1e-15);
        assert!(best.gamma_x > 0.0 && best.gamma_x < 1.0 && best.r_y_bar > 0.0);
    }

    #[test]
    fn r_y_profile_matches_dense_scan() {
        let p = ParamPoint::new(1.0, 0.5).unwrap();
        let opts = LiftedOptions::default();
        let prof = LiftedProfile::new(p, &q(), &opts).unwrap();
        let res = prof.bound(1.4, 1e-8, &opts).unwrap();
        let c3 = res.best.unwrap().c3;
        let ry = res.best.unwrap().r_y;
        let f = |lr: f64| prof.r_y_profile(1.4, c3, lr.exp(), &opts);
        let (lo, hi) = (ry.ln() - 0.5, ry.ln() + 0.5);
        let (arg, max) = maximize_scalar(f, (lo, hi), 1e-6).unwrap();
        let mut dense = f64::NEG_INFINITY;
        let mut s = lo;
        while s <= hi {
            dense = dense.max(f(s));
            s += 1e-4;
        }
        assert!(max >= dense - 1e-12, "{max} vs {dense}");
        assert!((arg - ry.ln()).abs() < 1e-2);
    }

    #[test]
    fn c08_close_to_plain() {
        let opts = LiftedOptions::coarse();
        for x in [0.0, 0.3, 0.6, 0.85] {
            let p = ParamPoint::new(0.8, x).unwrap();
            let l = LiftedProfile::new(p, &q(), &opts).unwrap().bound(1.4, 1e-7, &opts).unwrap();
            let pl = phi0_plain(1.4, &p, &q()).unwrap().phi0;
            assert!((l.phi0_bar - pl).abs() <= 1e-2, "x={x}: {} vs {pl}", l.phi0_bar);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn f_q_lift_decreasing_in_t(c in 0.1f64..1.5, rho in 0.0f64..0.99, t in 0.01f64..50.0) {
            let p = ParamPoint::new(c, rho * c.sqrt()).unwrap();
            let a = f_q_lift(&p, t, 0.5, &q()).unwrap();
            let b = f_q_lift(&p, 1.5 * t, 0.5, &q()).unwrap();
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(b < a);
        }
    }
}

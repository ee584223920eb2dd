//! Plain bound for the magnitude (non-squared) objective.

use serde::{Deserialize, Serialize};

use super::{check_alpha, ParamPoint, RdtError};
use crate::numerics::quadrature::{gauss_weighted_integral, normal_pdf, GaussDomain, QuadratureSpec};
use crate::numerics::erfc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlainBoundResult {
    /// E(|g₀| − |g₀x + g₁r|)²
    pub f_q: f64,
    /// Optimal dual radius (0 when r = 0).
    pub r_y_hat: f64,
    pub phi0: f64,
}

/// Integrand in g₁ ≥ 0 after the g₀ expectation has been carried out.
#[inline]
fn plain_integrand(pt: &ParamPoint, g1: f64) -> f64 {
    let (x, r) = (pt.x, pt.r);
    let a = g1 * g1 * x;
    let b = g1 * r;
    let cc = -g1 * x / r;
    let i = a * (erfc(cc / std::f64::consts::SQRT_2) - 1.0) + 2.0 * b * normal_pdf(cc);
    (1.0 + pt.c) - 2.0 * i
}

/// E(|g₀| − |g₀x + g₁r|)² for iid standard normals g₀, g₁.
pub fn f_q_closed(pt: &ParamPoint, quad: &QuadratureSpec) -> Result<f64, RdtError> {
    if pt.r == 0.0 {
        return Ok((1.0 - pt.x) * (1.0 - pt.x));
    }
    let half = gauss_weighted_integral(|g1| plain_integrand(pt, g1), GaussDomain::HalfLine, quad)?;
    Ok((2.0 * half).max(0.0))
}

/// Bound value from a precomputed f_q.
pub fn phi0_from_fq(alpha: f64, pt: &ParamPoint, f_q: f64) -> PlainBoundResult {
    let s = (alpha * f_q).sqrt();
    let phi0 = (s - pt.r).max(0.0).powi(2);
    let r_y_hat = if pt.r > 0.0 { (s / pt.r - 1.0).max(0.0) } else { 0.0 };
    PlainBoundResult { f_q, r_y_hat, phi0 }
}

/// Plain bound φ₀(α; c, x) = max(√(α f_q) − r, 0)².
pub fn phi0_plain(alpha: f64, pt: &ParamPoint, quad: &QuadratureSpec) -> Result<PlainBoundResult, RdtError> {
    check_alpha(alpha)?;
    let f_q = f_q_closed(pt, quad)?;
    Ok(phi0_from_fq(alpha, pt, f_q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GaussianSampler;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Independent closed form via the bivariate-normal identity
    /// E|g₀||g₀x + g₁r| = (2/π)(r + x·arcsin(x/√c)).
    fn f_q_arcsin(c: f64, x: f64) -> f64 {
        let r = (c - x * x).max(0.0).sqrt();
        1.0 + c - 4.0 / PI * (r + x * (x / c.sqrt()).min(1.0).asin())
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn corner_values() {
        let p = ParamPoint::new(1.0, 1.0).unwrap();
        assert_eq!(f_q_closed(&p, &q()).unwrap(), 0.0);
        let p = ParamPoint::new(1.0, 0.0).unwrap();
        assert!((f_q_closed(&p, &q()).unwrap() - (2.0 - 4.0 / PI)).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_agreement() {
        let p = ParamPoint::new(0.7, 0.4).unwrap();
        let n = 2_000_000;
        let mut s = GaussianSampler::new(3);
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (g0, g1) = (s.sample(), s.sample());
            let d = (g0.abs() - (g0 * p.x + g1 * p.r).abs()).powi(2);
            m1 += d;
            m2 += d * d;
        }
        let mean = m1 / n as f64;
        let se = ((m2 / n as f64 - mean * mean) / n as f64).sqrt();
        let v = f_q_closed(&p, &q()).unwrap();
        assert!((v - mean).abs() < 4.0 * se, "{v} vs {mean} ± {se}");
    }

    #[test]
    fn zero_when_sqrt_alpha_fq_below_r() {
        let p = ParamPoint::new(1.0, 0.2).unwrap();
        let b = phi0_plain(0.5, &p, &q()).unwrap();
        assert!((0.5 * b.f_q).sqrt() <= p.r);
        assert_eq!(b.phi0, 0.0);
        assert_eq!(b.r_y_hat, 0.0);
    }

    #[test]
    fn critical_curve_is_nonincreasing_on_coarse_grid() {
        let vals: Vec<f64> = (0..=10)
            .map(|k| {
                let p = ParamPoint::new(1.0, k as f64 / 10.0).unwrap();
                phi0_plain(1.7932, &p, &q()).unwrap().phi0
            })
            .collect();
        assert_eq!(vals[10], 0.0);
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{vals:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_arcsin_identity(c in 0.05f64..2.0, rho in 0.0f64..1.0) {
            let p = ParamPoint::new(c, rho * c.sqrt()).unwrap();
            let v = f_q_closed(&p, &q()).unwrap();
            prop_assert!((v - f_q_arcsin(c, p.x)).abs() < 1e-9);
        }

        #[test]
        fn bound_invariants(alpha in 0.1f64..5.0, c in 0.05f64..2.0, rho in 0.0f64..1.0) {
            let p = ParamPoint::new(c, rho * c.sqrt()).unwrap();
            let b = phi0_plain(alpha, &p, &q()).unwrap();
            prop_assert!(b.f_q >= 0.0 && b.phi0 >= 0.0);
            let s = (alpha * b.f_q).sqrt();
            prop_assert!((b.phi0 - (s - p.r).max(0.0).powi(2)).abs() < 1e-14);
            if p.r > 0.0 {
                prop_assert!((b.r_y_hat - (s / p.r - 1.0).max(0.0)).abs() < 1e-12);
            }
            let b2 = phi0_from_fq(alpha * 1.1, &p, b.f_q);
            prop_assert!(b2.phi0 >= b.phi0);
        }
    }
}

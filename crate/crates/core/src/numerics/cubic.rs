//! Real nonnegative roots of the depressed cubic z³ + p z + q = 0.

use std::f64::consts::PI;

/// Candidate set for a minimisation over z ≥ 0 whose stationarity condition is
/// the cubic z³ + p_c z + q_c = 0. The boundary value 0 is always present.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicCandidates {
    pub p_c: f64,
    pub q_c: f64,
    values: [f64; 4],
    len: usize,
}

impl CubicCandidates {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn push(&mut self, z: f64) {
        if self.as_slice().iter().any(|&w| w == z) {
            return;
        }
        self.values[self.len] = z;
        self.len += 1;
    }
}

#[inline]
fn polish(z: f64, p: f64, q: f64) -> f64 {
    let mut z = z;
    for _ in 0..3 {
        let f = z * z * z + p * z + q;
        let d = 3.0 * z * z + p;
        if d == 0.0 {
            break;
        }
        let step = f / d;
        let next = z - step;
        if !next.is_finite() {
            break;
        }
        // keep the iterate only if it does not worsen the residual
        let fn_ = next * next * next + p * next + q;
        if fn_.abs() > f.abs() {
            break;
        }
        z = next;
        if step.abs() <= 1e-16 * z.abs() {
            break;
        }
    }
    z
}

/// All real roots of z³ + p z + q (with multiplicity collapsed), unsorted.
pub fn cubic_real_roots(p: f64, q: f64) -> ([f64; 3], usize) {
    let mut out = [0.0; 3];
    if p == 0.0 && q == 0.0 {
        return (out, 1);
    }
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        // one real root; pick the cube root that avoids cancellation
        let sign = if q > 0.0 { -1.0 } else { 1.0 };
        let u = sign * (q.abs() / 2.0 + disc.sqrt()).cbrt();
        let z = if u != 0.0 { u - p / (3.0 * u) } else { 0.0 };
        out[0] = polish(z, p, q);
        (out, 1)
    } else {
        // three real roots (p < 0 here): trigonometric form
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for (k, slot) in out.iter_mut().enumerate() {
            let z = m * (theta - 2.0 * PI * k as f64 / 3.0).cos();
            *slot = polish(z, p, q);
        }
        (out, 3)
    }
}

/// Nonnegative real roots of z³ + p_c z + q_c = 0 together with 0.
pub fn cubic_real_nonneg_roots(p_c: f64, q_c: f64) -> CubicCandidates {
    let mut c = CubicCandidates { p_c, q_c, values: [0.0; 4], len: 0 };
    c.push(0.0);
    let (roots, n) = cubic_real_roots(p_c, q_c);
    for &z in &roots[..n] {
        if z > 0.0 && z.is_finite() {
            c.push(z);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn residual(z: f64, p: f64, q: f64) -> f64 {
        (z * z * z + p * z + q).abs()
    }

    /// Real eigenvalues of the companion matrix.
    fn companion_roots(p: f64, q: f64) -> Vec<f64> {
        let m = Matrix3::new(0.0, 0.0, -q, 1.0, 0.0, -p, 0.0, 1.0, 0.0);
        m.complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < 1e-7)
            .map(|z| z.re)
            .collect()
    }

    #[test]
    fn factorable_examples() {
        let c = cubic_real_nonneg_roots(-1.0, 0.0);
        assert!(c.as_slice().contains(&0.0));
        assert!(c.as_slice().iter().any(|&z| (z - 1.0).abs() < 1e-14));
        assert_eq!(c.len(), 2);

        let c = cubic_real_nonneg_roots(0.0, -8.0);
        assert_eq!(c.len(), 2);
        assert!((c.as_slice()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn matches_companion_oracle() {
        let (p, q) = (-2.5, 0.7);
        let mut ours: Vec<f64> = cubic_real_nonneg_roots(p, q).as_slice()[1..].to_vec();
        let mut oracle: Vec<f64> = companion_roots(p, q).into_iter().filter(|&z| z > 0.0).collect();
        ours.sort_by(f64::total_cmp);
        oracle.sort_by(f64::total_cmp);
        assert_eq!(ours.len(), oracle.len());
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn double_root_at_zero_discriminant() {
        // (z - 1)²(z + 2) = z³ - 3z + 2
        let c = cubic_real_nonneg_roots(-3.0, 2.0);
        assert!(c.as_slice().iter().any(|&z| (z - 1.0).abs() < 1e-7));
    }

    proptest! {
        #[test]
        fn nonneg_and_small_residual(p in -50.0f64..50.0, q in -50.0f64..50.0) {
            let c = cubic_real_nonneg_roots(p, q);
            prop_assert!(c.as_slice().contains(&0.0));
            for &z in c.as_slice() {
                prop_assert!(z.is_finite() && z >= 0.0);
                if z > 0.0 {
                    prop_assert!(residual(z, p, q) <= 1e-8 * q.abs().max(1.0));
                }
            }
        }

        #[test]
        fn finds_every_positive_companion_root(p in -20.0f64..20.0, q in -20.0f64..20.0) {
            let c = cubic_real_nonneg_roots(p, q);
            for z in companion_roots(p, q) {
                if z > 1e-6 {
                    let hit = c.as_slice().iter().any(|&w| (w - z).abs() < 1e-5 * z.max(1.0));
                    prop_assert!(hit, "missing root {} for p={} q={}", z, p, q);
                }
            }
        }
    }
}

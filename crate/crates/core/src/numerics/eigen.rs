//! Power iteration for the dominant eigenpair of a matrix-free PSD operator.

use super::NumericsError;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Dominant eigenpair of the symmetric PSD operator realised by `apply`
/// (`apply(v, out)` writes M v into `out`). Stops once
/// ‖M v − λ v‖₂ ≤ tol·λ. `start` defaults to a fixed non-degenerate vector.
pub fn power_iteration<F>(
    mut apply: F,
    dim: usize,
    tol: f64,
    max_iter: usize,
    start: Option<&[f64]>,
) -> Result<(f64, Vec<f64>), NumericsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(NumericsError::InvalidSpec("power iteration on an empty space".into()));
    }
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == dim && norm(s) > 0.0 => s.to_vec(),
        Some(_) => return Err(NumericsError::InvalidSpec("bad start vector".into())),
        None => (0..dim).map(|i| 1.0 + 0.37 * ((i * 7 + 3) % 11) as f64).collect(),
    };
    let n0 = norm(&v);
    v.iter_mut().for_each(|a| *a /= n0);
    let mut mv = vec![0.0; dim];

    for _ in 0..max_iter {
        apply(&v, &mut mv);
        let lambda: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let res = v
            .iter()
            .zip(&mv)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        let nm = norm(&mv);
        if nm == 0.0 {
            // M v = 0: v spans the null space and the operator is zero on it
            return Ok((0.0, v));
        }
        if !nm.is_finite() {
            return Err(NumericsError::NonFinite("power iteration diverged".into()));
        }
        if res <= tol * lambda {
            return Ok((lambda, v));
        }
        for (a, b) in v.iter_mut().zip(&mv) {
            *a = b / nm;
        }
    }
    Err(NumericsError::NonConvergence(format!("power iteration: {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(m: &DMatrix<f64>) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |v, out| {
            for i in 0..m.nrows() {
                out[i] = (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum();
            }
        }
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &b * b.transpose()
    }

    #[test]
    fn diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let (l, v) = power_iteration(dense_apply(&m), 2, 1e-10, 10_000, None).unwrap();
        assert!((l - 3.0).abs() < 1e-9);
        assert!((v[0].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_accepts_any_unit_vector() {
        let (l, v) = power_iteration(|v, o| o.copy_from_slice(v), 4, 1e-12, 10, None).unwrap();
        assert!((l - 1.0).abs() < 1e-14);
        assert!((norm(&v) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_psd(&mut rng, 5);
        let eig = SymmetricEigen::new(m.clone());
        let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let (l, _) = power_iteration(dense_apply(&m), 5, 1e-10, 100_000, None).unwrap();
        assert!((l - top).abs() < 1e-6 * top.max(1.0));
    }

    #[test]
    fn residual_on_random_psd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tol = 1e-6;
        for _ in 0..100 {
            let n = rng.random_range(1..=20);
            let m = random_psd(&mut rng, n);
            let (l, v) = power_iteration(dense_apply(&m), n, tol, 1_000_000, None).unwrap();
            let mut mv = vec![0.0; n];
            dense_apply(&m)(&v, &mut mv);
            let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= tol * l);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_nonconvergence() {
        // rotation-like operator never settles (not PSD, exercises the error path)
        let r = power_iteration(|v, o| { o[0] = -v[1]; o[1] = v[0]; }, 2, 1e-12, 50, None);
        assert!(r.is_err());
    }
}

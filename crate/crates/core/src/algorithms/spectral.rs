use ndarray::Array1;

use super::{AlgorithmError, ProblemInstance};
use crate::numerics::power_iteration;

/// Norm of the returned starting point (strictly inside the barrier domain).
pub const SPECTRAL_NORM: f64 = 0.99;

/// Top eigenvector of Aᵀ diag(y) A, by power iteration on v ↦ Aᵀ(y ∘ Av),
/// scaled to norm [`SPECTRAL_NORM`].
pub fn spectral_init(inst: &ProblemInstance) -> Result<Array1<f64>, AlgorithmError> {
    let a = &inst.a;
    let y = &inst.y;
    let apply = |v: &[f64], out: &mut [f64]| {
        let av = a.dot(&ndarray::ArrayView1::from(v));
        let w = &av * y;
        let r = a.t().dot(&w);
        out.copy_from_slice(r.as_slice().expect("contiguous"));
    };
    let (_, v) = power_iteration(apply, inst.n(), 1e-9, 20_000, None)?;
    let v = Array1::from_vec(v);
    let nv = v.dot(&v).sqrt();
    Ok(v * (SPECTRAL_NORM / nv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generate_instance;
    use nalgebra::DMatrix;

    #[test]
    fn matches_dense_eigenvector() {
        for seed in 0..5 {
            let inst = generate_instance(3, 5.0 / 3.0, seed);
            assert_eq!(inst.m(), 5);
            let mut m = DMatrix::<f64>::zeros(3, 3);
            for i in 0..inst.m() {
                for j in 0..3 {
                    for k in 0..3 {
                        m[(j, k)] += inst.y[i] * inst.a[(i, j)] * inst.a[(i, k)];
                    }
                }
            }
            let eig = m.symmetric_eigen();
            let top = eig.eigenvalues.imax();
            let u = eig.eigenvectors.column(top);
            let v = spectral_init(&inst).unwrap();
            assert!((v.dot(&v).sqrt() - SPECTRAL_NORM).abs() < 1e-10);
            let cos = (0..3).map(|j| u[j] * v[j]).sum::<f64>() / SPECTRAL_NORM;
            assert!(cos.abs() >= 1.0 - 1e-6, "seed {seed}: cos {cos}");
        }
    }

    #[test]
    fn correlates_with_signal() {
        for seed in 0..10 {
            let inst = generate_instance(200, 3.0, 500 + seed);
            let v = spectral_init(&inst).unwrap();
            let overlap = v.dot(&inst.x_bar) / SPECTRAL_NORM;
            assert!(overlap.abs() >= 0.2, "seed {seed}: {overlap}");
        }
    }
}

use ndarray::{Array1, ArrayView1};

use super::{AlgorithmError, ProblemInstance};

fn check_dim(inst: &ProblemInstance, x: ArrayView1<f64>) -> Result<(), AlgorithmError> {
    if x.len() == inst.n() {
        Ok(())
    } else {
        Err(AlgorithmError::DimensionMismatch { expected: inst.n(), got: x.len() })
    }
}

/// Σᵢ (yᵢ − (aᵢ·x)²)².
pub fn f_plain(inst: &ProblemInstance, x: ArrayView1<f64>) -> Result<f64, AlgorithmError> {
    check_dim(inst, x)?;
    let ax = inst.a.dot(&x);
    Ok(ax.iter().zip(inst.y.iter()).map(|(p, y)| (y - p * p).powi(2)).sum())
}

/// −4 Σᵢ (yᵢ − (aᵢ·x)²)(aᵢ·x) aᵢ.
pub fn grad_f_plain(inst: &ProblemInstance, x: ArrayView1<f64>) -> Result<Array1<f64>, AlgorithmError> {
    check_dim(inst, x)?;
    let ax = inst.a.dot(&x);
    let w: Array1<f64> = ax.iter().zip(inst.y.iter()).map(|(p, y)| -4.0 * (y - p * p) * p).collect();
    Ok(inst.a.t().dot(&w))
}

fn barrier_slack(x: ArrayView1<f64>) -> Result<f64, AlgorithmError> {
    let sq = x.dot(&x);
    if sq < 1.0 {
        Ok(1.0 - sq)
    } else {
        Err(AlgorithmError::InfeasiblePoint { sq_norm: sq })
    }
}

/// t₀·f_plain(x) − ln(1 − ‖x‖²), defined for ‖x‖ < 1.
pub fn f_bar(inst: &ProblemInstance, t0: f64, x: ArrayView1<f64>) -> Result<f64, AlgorithmError> {
    check_dim(inst, x)?;
    let slack = barrier_slack(x)?;
    Ok(t0 * f_plain(inst, x)? - slack.ln())
}

/// t₀·∇f_plain(x) + 2x/(1 − ‖x‖²).
pub fn grad_f_bar(inst: &ProblemInstance, t0: f64, x: ArrayView1<f64>) -> Result<Array1<f64>, AlgorithmError> {
    check_dim(inst, x)?;
    let slack = barrier_slack(x)?;
    let mut g = grad_f_plain(inst, x)?;
    g.zip_mut_with(&x, |gi, xi| *gi = t0 * *gi + 2.0 * xi / slack);
    Ok(g)
}

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AlgorithmError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReshuffleConfig {
    pub fraction: f64,
    pub repeats: usize,
}

impl Default for ReshuffleConfig {
    fn default() -> Self {
        Self { fraction: 0.075, repeats: 10 }
    }
}

impl ReshuffleConfig {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        if self.fraction > 0.0 && self.fraction < 1.0 && self.repeats >= 1 {
            Ok(())
        } else {
            Err(AlgorithmError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Try `repeats` copies of x with the signs of ⌈fraction·n⌉ uniformly chosen
/// coordinates flipped; return the lowest-scoring candidate, x itself included.
/// Ties keep the earlier candidate, so x wins any tie.
pub fn reshuffle<S, R>(
    x: ArrayView1<f64>,
    cfg: &ReshuffleConfig,
    mut scorer: S,
    rng: &mut R,
) -> Result<Array1<f64>, AlgorithmError>
where
    S: FnMut(ArrayView1<f64>) -> f64,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let n = x.len();
    let mut best = x.to_owned();
    if n == 0 {
        return Ok(best);
    }
    let k = ((cfg.fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut best_score = scorer(x);
    let mut cand = x.to_owned();
    for _ in 0..cfg.repeats {
        cand.assign(&x);
        for i in rand::seq::index::sample(rng, n, k) {
            cand[i] = -cand[i];
        }
        let s = scorer(cand.view());
        if s < best_score || (best_score.is_nan() && !s.is_nan()) {
            best_score = s;
            best.assign(&cand);
        }
    }
    Ok(best)
}

//! Monte-Carlo phase-transition sweeps and the matching theoretical overlay.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{run_algorithm, AlgoConfig, Algorithm, AlgorithmError, ProblemInstance};
use crate::manifold::{critical_alpha, BoundOptions, BoundVariant, CriticalPredicate, CurveSpec, GridSpec, ManifoldError};
use crate::numerics::{derive_seed, GaussianSampler};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// Random instance with m = round(α·n) measurements: A iid N(0, 1) row-major,
/// x̄ a normalised Gaussian vector, y = (A x̄)².
pub fn generate_instance(n: usize, alpha: f64, seed: u64) -> ProblemInstance {
    let m = ((alpha * n as f64).round() as usize).max(1);
    let mut s = GaussianSampler::new(seed);
    let a = Array2::from_shape_fn((m, n), |_| s.sample());
    let mut x: Array1<f64> = (0..n).map(|_| s.sample()).collect();
    let nx = x.dot(&x).sqrt();
    x /= nx;
    ProblemInstance::new(a, x, seed).expect("shapes agree by construction")
}

/// Seed of the instance for trial `trial` at α index `alpha_index`.
pub fn instance_seed(master: u64, alpha_index: usize, trial: usize) -> u64 {
    derive_seed(&[master, alpha_index as u64, trial as u64])
}

/// Seed of an algorithm's private randomness for one trial.
pub fn algorithm_seed(master: u64, alpha_index: usize, trial: usize, algorithm: Algorithm) -> u64 {
    derive_seed(&[master, alpha_index as u64, trial as u64, algorithm.id()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: usize,
    pub alpha_values: Vec<f64>,
    pub trials_per_alpha: usize,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    #[serde(default = "default_success_tol")]
    pub success_tol: f64,
    #[serde(default)]
    pub algo: AlgoConfig,
}

fn default_success_tol() -> f64 {
    1e-3
}

impl SweepSpec {
    /// n = 100, 20 trials per α, α ∈ {1.2, 1.4, …, 3.2}, all algorithms.
    pub fn desk() -> Self {
        Self {
            n: 100,
            alpha_values: (0..11).map(|k| (12 + 2 * k) as f64 / 10.0).collect(),
            trials_per_alpha: 20,
            algorithms: Algorithm::ALL.to_vec(),
            master_seed: 2024,
            success_tol: 1e-3,
            algo: AlgoConfig::default(),
        }
    }

    /// The full-size protocol (n = 300); expect hours of run time.
    pub fn paper_scale() -> Self {
        Self { n: 300, ..Self::desk() }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |s: &str| Err(ExperimentError::InvalidSpec(s.into()));
        if self.n < 10 {
            return bad("n must be at least 10");
        }
        if self.trials_per_alpha == 0 {
            return bad("trials_per_alpha must be positive");
        }
        if self.alpha_values.is_empty() || self.alpha_values.iter().any(|a| !(*a > 1.0) || !a.is_finite()) {
            return bad("alpha values must be finite and > 1");
        }
        if self.alpha_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("alpha values must be strictly increasing");
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm selected");
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return bad("duplicate algorithm");
        }
        if !(self.success_tol > 0.0) {
            return bad("success_tol must be positive");
        }
        self.algo.validate()?;
        Ok(())
    }
}

/// One (algorithm, α, trial) outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub alpha_index: usize,
    pub trial: usize,
    pub instance_seed: u64,
    pub seed: u64,
    pub success: bool,
    pub overlap: f64,
    pub sq_norm: f64,
    pub rounds: usize,
    /// Overlap after the first round (NaN on failure).
    pub round1_overlap: f64,
    pub max_traj_sq_norm: f64,
    /// Error that ended the trial early; such trials count as failures.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_rounds: f64,
    /// Mean of |x̂ᵀx̄|/‖x̂‖ over the trials that ran to completion.
    pub mean_final_overlap: f64,
    pub max_traj_sq_norm: f64,
    /// Fraction of trials whose first-round |overlap| was at least 0.8.
    pub round1_overlap_ge_0_8: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

impl TransitionTable {
    pub const COLUMNS: [&'static str; 9] = [
        "algorithm",
        "alpha",
        "trials",
        "successes",
        "success_rate",
        "mean_rounds",
        "mean_final_overlap",
        "max_traj_sq_norm",
        "round1_overlap_ge_0_8",
    ];

    pub fn row(&self, algorithm: Algorithm, alpha: f64) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.alpha == alpha)
    }

    /// Aggregates trial records, which must be sorted by (algorithm, α index, trial).
    pub fn from_trials(trials: &[TrialRecord]) -> Self {
        let mut rows = Vec::new();
        for group in trials.chunk_by(|a, b| a.algorithm == b.algorithm && a.alpha_index == b.alpha_index) {
            let n = group.len();
            let successes = group.iter().filter(|t| t.success).count();
            let done: Vec<&TrialRecord> = group.iter().filter(|t| t.failure.is_none()).collect();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                if done.is_empty() {
                    f64::NAN
                } else {
                    done.iter().map(|t| f(t)).sum::<f64>() / done.len() as f64
                }
            };
            rows.push(TransitionRow {
                algorithm: group[0].algorithm,
                alpha: group[0].alpha,
                trials: n,
                successes,
                success_rate: successes as f64 / n as f64,
                mean_rounds: mean(&|t| t.rounds as f64),
                mean_final_overlap: mean(&|t| t.overlap.abs()),
                max_traj_sq_norm: done.iter().map(|t| t.max_traj_sq_norm).fold(f64::NAN, f64::max),
                round1_overlap_ge_0_8: group.iter().filter(|t| t.round1_overlap.abs() >= 0.8).count() as f64 / n as f64,
            });
        }
        Self { rows }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub trials: Vec<TrialRecord>,
    pub table: TransitionTable,
}

fn run_trial(spec: &SweepSpec, alpha_index: usize, trial: usize) -> Vec<TrialRecord> {
    let alpha = spec.alpha_values[alpha_index];
    let iseed = instance_seed(spec.master_seed, alpha_index, trial);
    let inst = generate_instance(spec.n, alpha, iseed);
    let cfg = AlgoConfig { success_tol: spec.success_tol, ..spec.algo.clone() };
    spec.algorithms
        .iter()
        .map(|&algorithm| {
            let seed = algorithm_seed(spec.master_seed, alpha_index, trial, algorithm);
            let base = TrialRecord {
                algorithm,
                alpha,
                alpha_index,
                trial,
                instance_seed: iseed,
                seed,
                success: false,
                overlap: f64::NAN,
                sq_norm: f64::NAN,
                rounds: 0,
                round1_overlap: f64::NAN,
                max_traj_sq_norm: f64::NAN,
                failure: None,
            };
            match run_algorithm(&inst, algorithm, &cfg, seed) {
                Ok(r) => TrialRecord {
                    success: r.success,
                    overlap: r.overlap,
                    sq_norm: r.sq_norm,
                    rounds: r.hybrid_rounds,
                    round1_overlap: r.round_overlaps.first().copied().unwrap_or(f64::NAN),
                    max_traj_sq_norm: r.max_traj_sq_norm,
                    ..base
                },
                Err(e) => TrialRecord { failure: Some(e.to_string()), ..base },
            }
        })
        .collect()
}

/// Runs every (α, trial) in parallel; each trial draws a fresh instance shared
/// by all selected algorithms. Output order does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.alpha_values.len())
        .flat_map(|i| (0..spec.trials_per_alpha).map(move |t| (i, t)))
        .collect();
    let mut trials: Vec<TrialRecord> = jobs.par_iter().flat_map_iter(|&(i, t)| run_trial(spec, i, t)).collect();
    trials.sort_by_key(|t| (t.algorithm, t.alpha_index, t.trial));
    let table = TransitionTable::from_trials(&trials);
    Ok(SweepResult { trials, table })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub variant: BoundVariant,
    pub critical_alpha: f64,
}

/// Critical α of each bound variant (c = 1 slice monotonicity), for plotting
/// next to a simulated transition table.
pub fn theoretical_overlay(
    alpha_range: (f64, f64),
    variants: &[BoundVariant],
    alpha_tol: f64,
    opts: &BoundOptions,
) -> Result<Vec<OverlayRow>, ExperimentError> {
    variants
        .iter()
        .map(|&variant| {
            let r = critical_alpha(
                variant,
                CriticalPredicate::C1CurveMonotone,
                alpha_range,
                alpha_tol,
                &CurveSpec::default(),
                &GridSpec::square(0.05, 1.0, 40),
                opts,
            )?;
            Ok(OverlayRow { variant, critical_alpha: r.alpha_critical })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alphas: Vec<f64>, trials: usize) -> SweepSpec {
        SweepSpec {
            n: 50,
            alpha_values: alphas,
            trials_per_alpha: trials,
            algorithms: vec![Algorithm::Hybrid],
            master_seed: 17,
            success_tol: 1e-3,
            algo: AlgoConfig::default(),
        }
    }

    #[test]
    fn instance_shape_and_reproducibility() {
        let a = generate_instance(4, 2.0, 99);
        assert_eq!((a.m(), a.n()), (8, 4));
        assert_eq!(a, generate_instance(4, 2.0, 99));
        assert_ne!(a.a, generate_instance(4, 2.0, 100).a);
        let y = a.a.dot(&a.x_bar).mapv(|v| v * v);
        assert_eq!(y, a.y);
    }

    #[test]
    fn entry_variance() {
        let inst = generate_instance(1000, 1.0, 5);
        let n = inst.a.len() as f64;
        let mean = inst.a.sum() / n;
        let var = inst.a.mapv(|v| (v - mean).powi(2)).sum() / n;
        assert!((0.99..=1.01).contains(&var), "{var}");
    }

    #[test]
    fn seeds_are_distinct() {
        let mut s: Vec<u64> = (0..20).flat_map(|i| (0..50).map(move |t| instance_seed(3, i, t))).collect();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 1000);
    }

    #[test]
    fn spec_validation() {
        assert!(small(vec![1.5], 1).validate().is_ok());
        assert!(small(vec![0.9], 1).validate().is_err());
        assert!(small(vec![2.0, 1.5], 1).validate().is_err());
        assert!(small(vec![1.5], 0).validate().is_err());
        assert!(SweepSpec { n: 5, ..small(vec![1.5], 1) }.validate().is_err());
    }

    #[test]
    fn far_supercritical_always_succeeds() {
        let r = run_sweep(&small(vec![10.0], 5)).unwrap();
        assert_eq!(r.table.rows.len(), 1);
        assert_eq!(r.table.rows[0].success_rate, 1.0);
    }

    #[test]
    fn near_information_limit_mostly_fails() {
        let r = run_sweep(&small(vec![1.05], 5)).unwrap();
        assert!(r.table.rows[0].success_rate <= 0.2);
    }

    #[test]
    fn table_shape_and_determinism() {
        let spec = SweepSpec { algorithms: Algorithm::ALL.to_vec(), ..small(vec![2.0, 4.0], 1) };
        let a = run_sweep(&spec).unwrap();
        assert_eq!(a.table.rows.len(), 6);
        assert_eq!(a, run_sweep(&spec).unwrap());
        for row in &a.table.rows {
            assert_eq!(row.success_rate, row.successes as f64 / row.trials as f64);
        }
    }

    #[test]
    fn empty_overlay() {
        assert!(theoretical_overlay((1.2, 2.5), &[], 1e-3, &BoundOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn plain_overlay() {
        let rows = theoretical_overlay((1.2, 2.5), &[BoundVariant::Plain], 1e-3, &BoundOptions::default()).unwrap();
        assert!((rows[0].critical_alpha - 1.7932).abs() < 5e-3);
    }
}

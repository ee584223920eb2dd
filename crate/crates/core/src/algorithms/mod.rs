//! Descent algorithms for recovering x̄ from y = (Ax̄)².
//!
//! All routines assume ‖x̄‖ = 1. Each run is sequential and deterministic
//! given the instance and the algorithm seed.

pub mod descent;
pub mod objective;
pub mod reshuffle;
pub mod spectral;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

pub use descent::{
    barrier_start, gradback, gradbar, gradplain, BarrierOutcome, BarrierSchedule, GradConfig, GradOutcome, StopReason,
};
pub use objective::{f_bar, f_plain, grad_f_bar, grad_f_plain};
pub use reshuffle::{reshuffle, ReshuffleConfig};
pub use spectral::{spectral_init, SPECTRAL_NORM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point outside the unit ball (‖x‖² = {sq_norm})")]
    InfeasiblePoint { sq_norm: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Measurements y = (A x̄)² of a unit-norm signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub a: Array2<f64>,
    pub x_bar: Array1<f64>,
    pub y: Array1<f64>,
    pub seed: u64,
}

impl ProblemInstance {
    /// Builds the instance, computing y from `a` and `x_bar`.
    pub fn new(a: Array2<f64>, x_bar: Array1<f64>, seed: u64) -> Result<Self, AlgorithmError> {
        if a.ncols() != x_bar.len() {
            return Err(AlgorithmError::DimensionMismatch { expected: a.ncols(), got: x_bar.len() });
        }
        let y = a.dot(&x_bar).mapv(|v| v * v);
        Ok(Self { a, x_bar, y, seed })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Same A with the signal scaled by `s` (measurements scale by s²).
    pub fn rescaled(&self, s: f64) -> Self {
        Self { a: self.a.clone(), x_bar: &self.x_bar * s, y: &self.y * (s * s), seed: self.seed }
    }
}

/// Success up to the global sign: min(‖x̂ − x̄‖, ‖x̂ + x̄‖) ≤ tol.
pub fn success_test(inst: &ProblemInstance, x_hat: ArrayView1<f64>, tol: f64) -> bool {
    if x_hat.len() != inst.n() {
        return false;
    }
    let (mut dm, mut dp) = (0.0, 0.0);
    for (a, b) in x_hat.iter().zip(inst.x_bar.iter()) {
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    dm.min(dp).sqrt() <= tol
}

/// x̂ᵀx̄ / ‖x̂‖ (0 for x̂ = 0).
pub fn overlap(inst: &ProblemInstance, x_hat: ArrayView1<f64>) -> f64 {
    let nx = x_hat.dot(&x_hat).sqrt();
    if nx == 0.0 {
        0.0
    } else {
        (x_hat.dot(&inst.x_bar) / nx).clamp(-1.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Hybrid,
    Gradplain,
    Gradbar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Hybrid, Algorithm::Gradplain, Algorithm::Gradbar];

    /// Stable identifier used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Algorithm::Hybrid => 1,
            Algorithm::Gradplain => 2,
            Algorithm::Gradbar => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hybrid => "hybrid",
            Algorithm::Gradplain => "gradplain",
            Algorithm::Gradbar => "gradbar",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Everything a run needs besides the instance and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoConfig {
    /// Initial and largest line-search step is `step_scale / m`.
    pub step_scale: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub f_rel_tol: f64,
    pub schedule: BarrierSchedule,
    pub reshuffle: ReshuffleConfig,
    pub max_rounds: usize,
    pub success_tol: f64,
    /// Candidate signal norms for the unknown-norm outer loop; empty means ‖x̄‖ = 1 is known.
    pub norm_sweep: Vec<f64>,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            step_scale: 5e-3,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            grad_tol: 1e-8,
            max_iters: 5000,
            f_rel_tol: 1e-13,
            schedule: BarrierSchedule::default(),
            reshuffle: ReshuffleConfig::default(),
            max_rounds: 4,
            success_tol: 1e-3,
            norm_sweep: Vec::new(),
        }
    }
}

impl AlgoConfig {
    pub fn grad_config(&self, m: usize) -> GradConfig {
        GradConfig {
            step_init: self.step_scale / m.max(1) as f64,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            f_rel_tol: self.f_rel_tol,
        }
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        self.grad_config(1).validate()?;
        self.schedule.validate()?;
        self.reshuffle.validate()?;
        if self.max_rounds == 0 || !(self.success_tol > 0.0) || self.norm_sweep.iter().any(|v| !(*v > 0.0)) {
            return Err(AlgorithmError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Outcome of one algorithm run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub x_hat: Vec<f64>,
    pub overlap: f64,
    pub sq_norm: f64,
    pub final_objective: f64,
    /// Accepted iterations of every descent stage, in execution order.
    pub stage_iters: Vec<usize>,
    pub hybrid_rounds: usize,
    /// Overlap after each completed round (one entry for single-pass algorithms).
    pub round_overlaps: Vec<f64>,
    pub max_traj_sq_norm: f64,
    /// Some line search fell below the minimum step.
    pub stalled: bool,
    pub success: bool,
    pub seed: u64,
}

impl RunRecord {
    fn finish(
        inst: &ProblemInstance,
        algorithm: Algorithm,
        x: Array1<f64>,
        mut partial: RunRecord,
        tol: f64,
    ) -> Result<RunRecord, AlgorithmError> {
        partial.algorithm = algorithm;
        partial.overlap = overlap(inst, x.view());
        partial.sq_norm = x.dot(&x);
        partial.final_objective = f_plain(inst, x.view())?;
        partial.success = success_test(inst, x.view(), tol);
        partial.x_hat = x.to_vec();
        Ok(partial)
    }

    fn empty(seed: u64, x0: &Array1<f64>) -> Self {
        RunRecord {
            algorithm: Algorithm::Hybrid,
            x_hat: Vec::new(),
            overlap: 0.0,
            sq_norm: 0.0,
            final_objective: 0.0,
            stage_iters: Vec::new(),
            hybrid_rounds: 0,
            round_overlaps: Vec::new(),
            max_traj_sq_norm: x0.dot(x0),
            stalled: false,
            success: false,
            seed,
        }
    }
}

/// Rounds of gradbar → reshuffle → gradplain → reshuffle, stopping as soon as
/// the estimate passes the success test. A starting point that already passes
/// counts as success in round 1 with no descent work.
pub fn hybrid(
    inst: &ProblemInstance,
    x0: Array1<f64>,
    cfg: &AlgoConfig,
    seed: u64,
) -> Result<RunRecord, AlgorithmError> {
    cfg.validate()?;
    let grad = cfg.grad_config(inst.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = RunRecord::empty(seed, &x0);
    let scorer = |v: ArrayView1<f64>| f_plain(inst, v).unwrap_or(f64::INFINITY);
    let mut x = x0;
    if success_test(inst, x.view(), cfg.success_tol) {
        rec.hybrid_rounds = 1;
        rec.round_overlaps.push(overlap(inst, x.view()));
        return RunRecord::finish(inst, Algorithm::Hybrid, x, rec, cfg.success_tol);
    }
    for round in 1..=cfg.max_rounds {
        let b = gradbar(inst, x, &cfg.schedule, &grad)?;
        rec.stage_iters.extend(&b.stage_iters);
        rec.stalled |= b.stalled;
        rec.max_traj_sq_norm = rec.max_traj_sq_norm.max(b.max_sq_norm);
        let xr = reshuffle(b.x.view(), &cfg.reshuffle, scorer, &mut rng)?;
        let p = gradplain(inst, xr, &grad)?;
        rec.stage_iters.push(p.iters);
        rec.stalled |= p.stalled();
        rec.max_traj_sq_norm = rec.max_traj_sq_norm.max(p.max_sq_norm);
        x = reshuffle(p.x.view(), &cfg.reshuffle, scorer, &mut rng)?;
        rec.hybrid_rounds = round;
        rec.round_overlaps.push(overlap(inst, x.view()));
        if success_test(inst, x.view(), cfg.success_tol) {
            break;
        }
    }
    RunRecord::finish(inst, Algorithm::Hybrid, x, rec, cfg.success_tol)
}

fn run_known_norm(
    inst: &ProblemInstance,
    algorithm: Algorithm,
    x0: Array1<f64>,
    cfg: &AlgoConfig,
    seed: u64,
) -> Result<RunRecord, AlgorithmError> {
    let grad = cfg.grad_config(inst.m());
    match algorithm {
        Algorithm::Hybrid => hybrid(inst, x0, cfg, seed),
        Algorithm::Gradplain => {
            let mut rec = RunRecord::empty(seed, &x0);
            let p = gradplain(inst, x0, &grad)?;
            rec.stage_iters.push(p.iters);
            rec.stalled = p.stalled();
            rec.max_traj_sq_norm = p.max_sq_norm;
            rec.hybrid_rounds = 1;
            rec.round_overlaps.push(overlap(inst, p.x.view()));
            RunRecord::finish(inst, algorithm, p.x, rec, cfg.success_tol)
        }
        Algorithm::Gradbar => {
            let mut rec = RunRecord::empty(seed, &x0);
            let b = gradbar(inst, x0, &cfg.schedule, &grad)?;
            rec.stage_iters = b.stage_iters;
            rec.stalled = b.stalled;
            rec.max_traj_sq_norm = b.max_sq_norm;
            rec.hybrid_rounds = 1;
            rec.round_overlaps.push(overlap(inst, b.x.view()));
            RunRecord::finish(inst, algorithm, b.x, rec, cfg.success_tol)
        }
    }
}

/// Spectral initialisation followed by `algorithm`. With a non-empty
/// `norm_sweep`, the run is repeated on the instance rescaled to each
/// candidate norm and the estimate with the smallest f_plain is kept.
pub fn run_algorithm(
    inst: &ProblemInstance,
    algorithm: Algorithm,
    cfg: &AlgoConfig,
    seed: u64,
) -> Result<RunRecord, AlgorithmError> {
    cfg.validate()?;
    if cfg.norm_sweep.is_empty() {
        let x0 = spectral_init(inst)?;
        return run_known_norm(inst, algorithm, x0, cfg, seed);
    }
    let mut best: Option<RunRecord> = None;
    for &nu in &cfg.norm_sweep {
        let scaled = inst.rescaled(1.0 / nu);
        let x0 = spectral_init(&scaled)?;
        let r = run_known_norm(&scaled, algorithm, x0, cfg, seed)?;
        let x = Array1::from_vec(r.x_hat.clone()) * nu;
        let rec = RunRecord { max_traj_sq_norm: r.max_traj_sq_norm * nu * nu, ..r };
        let rec = RunRecord::finish(inst, algorithm, x, rec, cfg.success_tol)?;
        if best.as_ref().is_none_or(|b| rec.final_objective < b.final_objective) {
            best = Some(rec);
        }
    }
    Ok(best.expect("non-empty sweep"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generate_instance;

    #[test]
    fn success_test_cases() {
        let inst = generate_instance(8, 2.0, 4);
        assert!(success_test(&inst, inst.x_bar.view(), 1e-3));
        assert!(success_test(&inst, (-&inst.x_bar).view(), 1e-3));
        assert!(!success_test(&inst, Array1::zeros(8).view(), 1e-3));
    }

    #[test]
    fn instance_invariants() {
        let inst = generate_instance(12, 2.5, 11);
        assert!((inst.x_bar.dot(&inst.x_bar) - 1.0).abs() < 1e-12);
        for i in 0..inst.m() {
            let p = inst.a.row(i).dot(&inst.x_bar);
            assert_eq!(inst.y[i], p * p);
        }
        assert!(ProblemInstance::new(Array2::zeros((3, 2)), Array1::zeros(3), 0).is_err());
    }

    #[test]
    fn hybrid_from_solution_does_no_work() {
        let inst = generate_instance(30, 3.0, 8);
        let r = hybrid(&inst, inst.x_bar.clone(), &AlgoConfig::default(), 1).unwrap();
        assert!(r.success);
        assert_eq!(r.hybrid_rounds, 1);
        assert!(r.stage_iters.is_empty());
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = generate_instance(30, 3.0, 77);
        let cfg = AlgoConfig::default();
        for algo in Algorithm::ALL {
            let a = run_algorithm(&inst, algo, &cfg, 5).unwrap();
            let b = run_algorithm(&inst, algo, &cfg, 5).unwrap();
            assert_eq!(a, b);
            assert!(a.overlap.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn gradplain_recovers_at_three() {
        let cfg = AlgoConfig::default();
        let wins: usize = (0..20)
            .map(|s| {
                let inst = generate_instance(100, 3.0, 300 + s);
                run_algorithm(&inst, Algorithm::Gradplain, &cfg, s).unwrap().success as usize
            })
            .sum();
        assert!(wins >= 16, "{wins}/20");
    }

    #[test]
    fn norm_sweep_picks_the_true_norm() {
        let inst = generate_instance(40, 4.0, 21);
        let cfg = AlgoConfig { norm_sweep: vec![0.5, 1.0, 2.0], ..AlgoConfig::default() };
        let r = run_algorithm(&inst, Algorithm::Gradplain, &cfg, 3).unwrap();
        assert!(r.success);
        assert!((r.sq_norm - 1.0).abs() < 1e-3);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("newton".parse::<Algorithm>().is_err());
    }
}

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::objective::{f_bar, f_plain, grad_f_bar, grad_f_plain};
use super::{AlgorithmError, ProblemInstance};

/// Smallest trial step before the line search gives up.
pub const MIN_STEP: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradConfig {
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Stop once an accepted step lowers the objective by at most
    /// `f_rel_tol·|f|` (0 disables).
    #[serde(default)]
    pub f_rel_tol: f64,
}

impl GradConfig {
    /// Defaults for a problem with `m` measurements.
    pub fn for_measurements(m: usize) -> Self {
        Self { step_init: 5e-3 / m.max(1) as f64, armijo_c: 1e-4, backtrack_factor: 0.5, grad_tol: 1e-8, max_iters: 5000, f_rel_tol: 1e-13 }
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let ok = self.step_init > 0.0
            && self.step_init.is_finite()
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.grad_tol >= 0.0
            && self.f_rel_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(AlgorithmError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    /// Relative decrease of an accepted step fell below `f_rel_tol`.
    FTol,
    MaxIters,
    /// The line search fell below [`MIN_STEP`]; the iterate is still valid.
    Stalled,
}

/// Result of one backtracked descent.
#[derive(Clone, Debug, PartialEq)]
pub struct GradOutcome {
    pub x: Array1<f64>,
    pub value: f64,
    pub iters: usize,
    pub stop: StopReason,
    /// Largest ‖x‖² over the accepted iterates, x₀ included.
    pub max_sq_norm: f64,
    /// Last accepted step (or `step_init` if none was accepted).
    pub last_step: f64,
    /// Objective at x₀ and at every accepted iterate.
    pub trace: Vec<f64>,
}

impl GradOutcome {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::GradTol | StopReason::FTol)
    }

    pub fn stalled(&self) -> bool {
        self.stop == StopReason::Stalled
    }
}

/// Gradient descent with Armijo backtracking. Trial points failing `feasible`
/// are treated as rejections, so every accepted iterate is feasible. Each
/// line search starts from the previous accepted step divided by the
/// backtracking factor, capped at `step_init`.
pub fn gradback<F, G, P>(
    mut objective: F,
    mut gradient: G,
    x0: Array1<f64>,
    cfg: &GradConfig,
    mut feasible: P,
) -> Result<GradOutcome, AlgorithmError>
where
    F: FnMut(ArrayView1<f64>) -> f64,
    G: FnMut(ArrayView1<f64>) -> Array1<f64>,
    P: FnMut(ArrayView1<f64>) -> bool,
{
    cfg.validate()?;
    if !feasible(x0.view()) {
        return Err(AlgorithmError::InfeasiblePoint { sq_norm: x0.dot(&x0) });
    }
    let mut x = x0;
    let mut fx = objective(x.view());
    if !fx.is_finite() {
        return Err(AlgorithmError::NonFinite("objective at the starting point".into()));
    }
    let mut out = GradOutcome {
        value: fx,
        iters: 0,
        stop: StopReason::MaxIters,
        max_sq_norm: x.dot(&x),
        last_step: cfg.step_init,
        trace: vec![fx],
        x: Array1::zeros(0),
    };
    let mut step = cfg.step_init;
    let mut cand = x.clone();

    while out.iters < cfg.max_iters {
        let g = gradient(x.view());
        let gsq = g.dot(&g);
        if !gsq.is_finite() {
            return Err(AlgorithmError::NonFinite("gradient".into()));
        }
        if gsq.sqrt() <= cfg.grad_tol * x.dot(&x).sqrt().max(1.0) {
            out.stop = StopReason::GradTol;
            break;
        }
        let mut t = step;
        let accepted = loop {
            ndarray::Zip::from(&mut cand).and(&x).and(&g).for_each(|c, &xi, &gi| *c = xi - t * gi);
            if feasible(cand.view()) {
                let fc = objective(cand.view());
                if fc.is_finite() && fc <= fx - cfg.armijo_c * t * gsq {
                    break Some(fc);
                }
            }
            t *= cfg.backtrack_factor;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some(fc) = accepted else {
            out.stop = StopReason::Stalled;
            break;
        };
        std::mem::swap(&mut x, &mut cand);
        let small_decrease = fx - fc <= cfg.f_rel_tol * fx.abs();
        fx = fc;
        out.trace.push(fc);
        out.iters += 1;
        out.last_step = t;
        out.max_sq_norm = out.max_sq_norm.max(x.dot(&x));
        step = (t / cfg.backtrack_factor).min(cfg.step_init);
        if small_decrease {
            out.stop = StopReason::FTol;
            break;
        }
    }
    out.value = fx;
    out.x = x;
    Ok(out)
}

/// Unconstrained descent on f_plain.
pub fn gradplain(inst: &ProblemInstance, x0: Array1<f64>, cfg: &GradConfig) -> Result<GradOutcome, AlgorithmError> {
    if x0.len() != inst.n() {
        return Err(AlgorithmError::DimensionMismatch { expected: inst.n(), got: x0.len() });
    }
    gradback(
        |x| f_plain(inst, x).unwrap_or(f64::INFINITY),
        |x| grad_f_plain(inst, x).expect("dimension checked"),
        x0,
        cfg,
        |_| true,
    )
}

/// Geometric t₀ schedule for the barrier method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    pub t0_init: f64,
    pub growth: f64,
    pub t0_max: f64,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self { t0_init: 5e-5, growth: 1.2, t0_max: 1e7 }
    }
}

impl BarrierSchedule {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        if self.t0_init > 0.0 && self.growth > 1.0 && self.t0_max.is_finite() {
            Ok(())
        } else {
            Err(AlgorithmError::InvalidConfig(format!("{self:?}")))
        }
    }

    /// t₀ values t0_init·growth^k for k = 0, 1, … up to and including the
    /// first one that reaches `t0_max`.
    pub fn stages(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 0.. {
            let t = self.t0_init * self.growth.powi(k);
            out.push(t);
            if t >= self.t0_max {
                break;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierOutcome {
    pub x: Array1<f64>,
    pub stage_iters: Vec<usize>,
    pub stalled: bool,
    pub max_sq_norm: f64,
}

/// Feasible starting point for the barrier: x₀ itself if ‖x₀‖ < 1, otherwise
/// x₀ rescaled to norm 0.99.
pub fn barrier_start(x0: Array1<f64>) -> Array1<f64> {
    let sq = x0.dot(&x0);
    if sq < 1.0 {
        x0
    } else {
        x0 * (0.99 / sq.sqrt())
    }
}

/// Sequence of backtracked descents on f_bar(t₀; ·) along the schedule, each
/// started from the previous stage's point. The step cap is divided by t₀ once
/// t₀ exceeds 1.
pub fn gradbar(
    inst: &ProblemInstance,
    x0: Array1<f64>,
    sched: &BarrierSchedule,
    cfg: &GradConfig,
) -> Result<BarrierOutcome, AlgorithmError> {
    sched.validate()?;
    if x0.len() != inst.n() {
        return Err(AlgorithmError::DimensionMismatch { expected: inst.n(), got: x0.len() });
    }
    let mut x = barrier_start(x0);
    let mut stage_cfg = *cfg;
    let mut out = BarrierOutcome { x: Array1::zeros(0), stage_iters: Vec::new(), stalled: false, max_sq_norm: x.dot(&x) };
    for t0 in sched.stages() {
        stage_cfg.step_init = cfg.step_init / t0.max(1.0);
        let r = gradback(
            |p| f_bar(inst, t0, p).unwrap_or(f64::INFINITY),
            |p| grad_f_bar(inst, t0, p).expect("feasible point"),
            x,
            &stage_cfg,
            |p| p.dot(&p) < 1.0,
        )?;
        out.stage_iters.push(r.iters);
        out.stalled |= r.stalled();
        out.max_sq_norm = out.max_sq_norm.max(r.max_sq_norm);
        x = r.x;
    }
    out.x = x;
    Ok(out)
}

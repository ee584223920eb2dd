use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use phase_manifold::algorithms::{run_algorithm, AlgoConfig, Algorithm, AlgorithmError, RunRecord};
use phase_manifold::experiments::{
    algorithm_seed, generate_instance, instance_seed, run_sweep, ExperimentError, SweepSpec, TransitionTable,
};
use phase_manifold::manifold::{
    build_manifold, critical_alpha as find_critical, detect_funnels, AxisRange, BoundVariant, CurveSpec, FunnelReport,
    GridSpec, ManifoldError, OverlapAxis, PointEvaluator,
};
use phase_manifold::rdt::{ParamPoint, RdtError};

use crate::output::{csv, ensure_writable, fmt17, json_pretty, with_suffix, write_file, RunManifest};
use crate::{seed_override, CliError, CriticalArgs, CurveArgs, ManifoldArgs, SimRunArgs, TransitionArgs};

impl From<RdtError> for CliError {
    fn from(e: RdtError) -> Self {
        match e {
            RdtError::Numerics(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ManifoldError> for CliError {
    fn from(e: ManifoldError) -> Self {
        match e {
            ManifoldError::Rdt(r) => r.into(),
            ManifoldError::TooManyFailures { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<AlgorithmError> for CliError {
    fn from(e: AlgorithmError) -> Self {
        match e {
            AlgorithmError::InvalidConfig(_) | AlgorithmError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            ExperimentError::Algorithm(a) => a.into(),
            ExperimentError::Manifold(m) => m.into(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("alpha must be positive, got {alpha}")))
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    with_suffix(out, ".manifest.json")
}

fn config_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serialisable")
}

/// Nodes of the x slice; the last node is exactly `hi`.
fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|k| if k + 1 == steps { hi } else { lo + (hi - lo) * k as f64 / (steps - 1) as f64 })
        .collect()
}

pub fn theory_curve(a: &CurveArgs) -> Result<(), CliError> {
    check_alpha(a.alpha)?;
    if a.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    if !(a.c > 0.0) || !a.c.is_finite() {
        return Err(usage(format!("c must be positive, got {}", a.c)));
    }
    let root = a.c.sqrt();
    let x_max = a.x_max.unwrap_or(root);
    if !(a.x_min <= x_max) || a.x_min < -root * (1.0 + 1e-12) || x_max > root * (1.0 + 1e-12) {
        return Err(usage(format!("need -√c ≤ x-min ≤ x-max ≤ √c (√c = {root})")));
    }
    ensure_writable(&a.out)?;
    let variant = a.variant.variant();
    let opts = a.variant.options();
    let xs = linspace(a.x_min, x_max.min(root), a.steps);
    let values: Result<Vec<f64>, CliError> = xs
        .par_iter()
        .map(|&x| {
            let pt = ParamPoint::new(a.c, x.clamp(-root, root))?;
            Ok(PointEvaluator::new(variant, pt, &opts)?.eval(a.alpha, &opts)?)
        })
        .collect();
    let values = values?;
    let body = csv(&["x", "phi0"], xs.iter().zip(&values).map(|(x, v)| vec![fmt17(*x), fmt17(*v)]));
    write_file(&a.out, &body)?;
    RunManifest::new("theory-curve", config_value(a), None, &[a.out.clone()]).write(&manifest_path(&a.out))
}

#[derive(Serialize)]
struct ManifoldFunnels<'a> {
    variant: String,
    alpha: f64,
    axis: OverlapAxis,
    grid: (usize, usize),
    #[serde(flatten)]
    report: &'a FunnelReport,
}

pub fn theory_manifold(a: &ManifoldArgs) -> Result<(), CliError> {
    check_alpha(a.alpha)?;
    if a.grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let grid_path = with_suffix(&a.out_prefix, ".grid.csv");
    let funnel_path = with_suffix(&a.out_prefix, ".funnels.json");
    ensure_writable(&grid_path)?;
    let variant = a.variant.variant();
    let opts = a.variant.options();
    let spec = GridSpec {
        c: AxisRange::new(a.c_range.0, a.c_range.1, a.grid),
        x: AxisRange::new(a.x_range.0, a.x_range.1, a.grid),
        axis: a.axis(),
    };
    let grid = build_manifold(a.alpha, variant, &spec, &opts)?;
    let report = detect_funnels(&grid, a.flat_tol);
    let rows = grid.nodes().map(|(c, x, v)| vec![fmt17(c), fmt17(x), fmt17(v)]);
    write_file(&grid_path, &csv(&["c", "x", "phi0"], rows))?;
    let funnels = ManifoldFunnels {
        variant: variant.name(),
        alpha: a.alpha,
        axis: grid.axis,
        grid: (grid.rows(), grid.cols()),
        report: &report,
    };
    write_file(&funnel_path, &json_pretty(&funnels))?;
    RunManifest::new("theory-manifold", config_value(a), None, &[grid_path, funnel_path])
        .write(&with_suffix(&a.out_prefix, ".manifest.json"))
}

#[derive(Serialize)]
struct CriticalOutput {
    variant: String,
    predicate: phase_manifold::manifold::CriticalPredicate,
    alpha_critical: f64,
    bracket: (f64, f64),
    tol: f64,
    final_interval: (f64, f64),
    predicate_evaluations: usize,
}

pub fn critical_alpha(a: &CriticalArgs) -> Result<(), CliError> {
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if a.points < 3 || a.grid < 2 {
        return Err(usage("--points must be at least 3 and --grid at least 2"));
    }
    if !(a.c > 0.0) {
        return Err(usage("c must be positive"));
    }
    ensure_writable(&a.out)?;
    let variant = a.variant.variant();
    let opts = a.variant.options();
    let curve = CurveSpec { c: a.c, x_lo: 0.0, x_hi: a.c.sqrt(), points: a.points };
    let c_hi = if matches!(variant, BoundVariant::Barrier { .. }) { 0.99 } else { 1.0 };
    let grid = GridSpec::square(0.05, c_hi, a.grid);
    let r = find_critical(variant, a.predicate.predicate(), a.bracket, a.tol, &curve, &grid, &opts)?;
    let out = CriticalOutput {
        variant: variant.name(),
        predicate: a.predicate.predicate(),
        alpha_critical: r.alpha_critical,
        bracket: a.bracket,
        tol: a.tol,
        final_interval: (r.lo, r.hi),
        predicate_evaluations: r.predicate_evaluations,
    };
    write_file(&a.out, &json_pretty(&out))?;
    RunManifest::new("critical-alpha", config_value(a), None, &[a.out.clone()]).write(&manifest_path(&a.out))
}

/// Reads a sweep spec from TOML, or JSON when the file ends in `.json`.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let spec: SweepSpec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
    };
    Ok(spec)
}

pub fn table_csv(table: &TransitionTable) -> String {
    let rows = table.rows.iter().map(|r| {
        vec![
            r.algorithm.name().to_string(),
            fmt17(r.alpha),
            r.trials.to_string(),
            r.successes.to_string(),
            fmt17(r.success_rate),
            fmt17(r.mean_rounds),
            fmt17(r.mean_final_overlap),
            fmt17(r.max_traj_sq_norm),
            fmt17(r.round1_overlap_ge_0_8),
        ]
    });
    csv(&TransitionTable::COLUMNS, rows)
}

pub fn sim_transition(a: &TransitionArgs) -> Result<(), CliError> {
    let mut spec = load_sweep_spec(&a.config_file)?;
    if let Some(seed) = seed_override()? {
        spec.master_seed = seed;
    }
    spec.validate()?;
    let trials_path = with_suffix(&a.out_prefix, ".trials.jsonl");
    let table_path = with_suffix(&a.out_prefix, ".table.csv");
    ensure_writable(&trials_path)?;
    let result = run_sweep(&spec)?;
    let mut lines = String::new();
    for t in &result.trials {
        lines.push_str(&serde_json::to_string(t).expect("serialisable"));
        lines.push('\n');
    }
    write_file(&trials_path, &lines)?;
    write_file(&table_path, &table_csv(&result.table))?;
    let config = serde_json::json!({ "args": a, "spec": spec });
    RunManifest::new("sim-transition", config, Some(spec.master_seed), &[trials_path, table_path])
        .write(&with_suffix(&a.out_prefix, ".manifest.json"))
}

#[derive(Serialize)]
struct SimRunOutput<'a> {
    n: usize,
    m: usize,
    alpha: f64,
    master_seed: u64,
    instance_seed: u64,
    record: &'a RunRecord,
}

pub fn sim_run(a: &SimRunArgs) -> Result<(), CliError> {
    if a.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", a.n)));
    }
    check_alpha(a.alpha)?;
    let algorithm: Algorithm = a.algorithm.parse().map_err(usage)?;
    let cfg: AlgoConfig = match &a.algo_config {
        None => AlgoConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
    };
    cfg.validate()?;
    ensure_writable(&a.out)?;
    let seed = seed_override()?.unwrap_or(a.seed);
    let iseed = instance_seed(seed, 0, 0);
    let inst = generate_instance(a.n, a.alpha, iseed);
    let record = run_algorithm(&inst, algorithm, &cfg, algorithm_seed(seed, 0, 0, algorithm))?;
    let out = SimRunOutput { n: inst.n(), m: inst.m(), alpha: a.alpha, master_seed: seed, instance_seed: iseed, record: &record };
    write_file(&a.out, &json_pretty(&out))?;
    let config = serde_json::json!({ "args": a, "algo": cfg });
    RunManifest::new("sim-run", config, Some(seed), &[a.out.clone()]).write(&manifest_path(&a.out))
}

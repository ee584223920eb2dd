//! Command-line front end for the theory curves, manifolds, critical
//! oversampling ratios and Monte-Carlo simulations.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phase_manifold::manifold::{BarrierSign, BoundOptions, BoundVariant, CriticalPredicate, OverlapAxis};
use phase_manifold::rdt::lifted::LiftedOptions;

/// Environment variable that overrides every master seed.
pub const SEED_ENV: &str = "PHASE_MANIFOLD_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "phase-manifold", version, about = "Random-duality manifolds and phase-retrieval simulations")]
pub struct Cli {
    /// Maximum number of worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound value along x at fixed c.
    TheoryCurve(CurveArgs),
    /// Bound over a (c, x) lattice plus its funnel points.
    TheoryManifold(ManifoldArgs),
    /// Bisection for the critical oversampling ratio.
    CriticalAlpha(CriticalArgs),
    /// Monte-Carlo success-rate sweep from a config file.
    SimTransition(TransitionArgs),
    /// One seeded recovery run.
    SimRun(SimRunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Plain,
    Lifted,
    #[value(alias = "plain_sq")]
    PlainSq,
    #[value(alias = "lifted_sq")]
    LiftedSq,
    Barrier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignName {
    Interior,
    #[value(alias = "as_printed")]
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Default,
    Coarse,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VariantArgs {
    #[arg(long, value_enum, default_value = "plain")]
    pub variant: VariantName,
    /// Barrier weight t₀ (barrier variant only).
    #[arg(long, default_value_t = 12.0)]
    pub t0: f64,
    #[arg(long, value_enum, default_value = "interior")]
    pub barrier_sign: SignName,
    /// Optimiser budget for the lifted bound.
    #[arg(long, value_enum, default_value = "default")]
    pub budget: Budget,
}

impl VariantArgs {
    pub fn variant(&self) -> BoundVariant {
        match self.variant {
            VariantName::Plain => BoundVariant::Plain,
            VariantName::Lifted => BoundVariant::Lifted,
            VariantName::PlainSq => BoundVariant::PlainSq,
            VariantName::LiftedSq => BoundVariant::LiftedSq,
            VariantName::Barrier => BoundVariant::Barrier {
                t0: self.t0,
                sign: match self.barrier_sign {
                    SignName::Interior => BarrierSign::Interior,
                    SignName::AsPrinted => BarrierSign::AsPrinted,
                },
            },
        }
    }

    pub fn options(&self) -> BoundOptions {
        let lifted = match self.budget {
            Budget::Default => LiftedOptions::default(),
            Budget::Coarse => LiftedOptions::coarse(),
        };
        BoundOptions { lifted, ..BoundOptions::default() }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x_min: f64,
    /// Defaults to √c.
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Normalized,
    Absolute,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ManifoldArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long)]
    pub alpha: f64,
    /// c range `lo,hi` (barrier manifolds need hi < 1).
    #[arg(long, value_parser = parse_pair, default_value = "0.05,1")]
    pub c_range: (f64, f64),
    /// Overlap range `lo,hi`: ρ = x/√c on the normalized axis, x on the absolute axis.
    #[arg(long, value_parser = parse_pair, default_value = "0,1")]
    pub x_range: (f64, f64),
    /// Nodes per axis.
    #[arg(long, default_value_t = 80)]
    pub grid: usize,
    #[arg(long, value_enum, default_value = "normalized")]
    pub axis: AxisName,
    /// Plateau tolerance for funnel detection (default 1e-9 of the value range).
    #[arg(long)]
    pub flat_tol: Option<f64>,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

impl ManifoldArgs {
    pub fn axis(&self) -> OverlapAxis {
        match self.axis {
            AxisName::Normalized => OverlapAxis::Normalized,
            AxisName::Absolute => OverlapAxis::Absolute,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateName {
    #[value(alias = "c1_curve_monotone")]
    C1CurveMonotone,
    #[value(alias = "single_funnel")]
    SingleFunnel,
}

impl PredicateName {
    pub fn predicate(self) -> CriticalPredicate {
        match self {
            PredicateName::C1CurveMonotone => CriticalPredicate::C1CurveMonotone,
            PredicateName::SingleFunnel => CriticalPredicate::SingleFunnel,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long, value_enum, default_value = "c1-curve-monotone")]
    pub predicate: PredicateName,
    /// α bracket `lo,hi`: the predicate must fail at lo and hold at hi.
    #[arg(long, value_parser = parse_pair, default_value = "1.1,2.5")]
    pub bracket: (f64, f64),
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Slice c for the curve predicate.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Points on the x slice for the curve predicate.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Nodes per axis for the funnel predicate.
    #[arg(long, default_value_t = 40)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TransitionArgs {
    /// Sweep spec as TOML (or JSON with a .json extension).
    #[arg(long)]
    pub config_file: PathBuf,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SimRunArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "hybrid")]
    pub algorithm: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Algorithm settings as TOML (defaults otherwise).
    #[arg(long)]
    pub algo_config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Seed from the environment override, if set.
pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}={s}: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let job = || match &cli.command {
        Command::TheoryCurve(a) => commands::theory_curve(a),
        Command::TheoryManifold(a) => commands::theory_manifold(a),
        Command::CriticalAlpha(a) => commands::critical_alpha(a),
        Command::SimTransition(a) => commands::sim_transition(a),
        Command::SimRun(a) => commands::sim_run(a),
    };
    match cli.threads {
        None => job(),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(job),
    }
}

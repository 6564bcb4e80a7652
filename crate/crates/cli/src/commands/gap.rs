use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use skillgap::features::load_manifest;
use skillgap::ot::{domain_gap, GapConfig, Solver};

use crate::config::{pick, require, to_json, write_output, FileConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Exact,
    Sinkhorn,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exact => Solver::Exact,
            SolverArg::Sinkhorn => Solver::Sinkhorn,
        }
    }
}

/// Earth Mover's Distance between the snippet features of two datasets.
#[derive(Debug, Args)]
pub struct GapArgs {
    /// JSON file with any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest of the first dataset.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Manifest of the second dataset.
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    /// Sinkhorn regularization as a fraction of the mean ground cost.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Rows drawn from each dataset at most.
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sinkhorn iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Sinkhorn marginal tolerance (L1).
    #[arg(long)]
    tol: Option<f64>,
    /// Where to write the result JSON. Printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapFile {
    a: Option<PathBuf>,
    b: Option<PathBuf>,
    solver: Option<SolverArg>,
    epsilon: Option<f64>,
    max_points: Option<usize>,
    seed: Option<u64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    out: Option<PathBuf>,
}

pub fn run(args: &GapArgs) -> Result<(), CliError> {
    let file = FileConfig::<GapFile>::load(args.config.as_deref())?;
    let f = &file.values;
    let a = require(args.a.clone().or_else(|| file.path(&f.a)), "a")?;
    let b = require(args.b.clone().or_else(|| file.path(&f.b)), "b")?;
    let out = args.out.clone().or_else(|| file.path(&f.out));

    let defaults = GapConfig::default();
    let cfg = GapConfig {
        max_points: pick(&args.max_points, &f.max_points).unwrap_or(defaults.max_points),
        seed: pick(&args.seed, &f.seed).unwrap_or(defaults.seed),
        solver: pick(&args.solver, &f.solver).map_or(defaults.solver, Solver::from),
        epsilon: pick(&args.epsilon, &f.epsilon).unwrap_or(defaults.epsilon),
        max_iters: pick(&args.max_iters, &f.max_iters).unwrap_or(defaults.max_iters),
        tol: pick(&args.tol, &f.tol).unwrap_or(defaults.tol),
    };
    if cfg.max_points == 0 {
        return Err(CliError::config("--max-points must be at least 1"));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(CliError::config(format!("--epsilon must be positive, got {}", cfg.epsilon)));
    }
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(CliError::config("--tol must be positive and --max-iters at least 1"));
    }

    let set_a = load_manifest(&a)?;
    let set_b = load_manifest(&b)?;
    let result = domain_gap(&set_a, &set_b, &cfg)?;
    let json = to_json(&result);
    match out {
        Some(path) => {
            write_output(&path, &json)?;
            println!("gap {:.6} ({} vs {} points)", result.value, result.points_a, result.points_b);
        }
        None => print!("{json}"),
    }
    Ok(())
}

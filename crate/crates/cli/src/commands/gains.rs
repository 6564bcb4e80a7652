use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use skillgap::fewshot::{compute_gains, gains_csv, EvalReport, ReportSet};

use crate::config::{pick, require, write_output, FileConfig};
use crate::error::CliError;

/// Average gain of one report directory over one or more baselines.
#[derive(Debug, Args)]
pub struct GainsArgs {
    /// JSON file with any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reports of the combined configuration.
    #[arg(long)]
    combined: Option<PathBuf>,
    /// Reports of a baseline configuration; repeat for several.
    #[arg(long = "baseline")]
    baselines: Option<Vec<PathBuf>>,
    /// CSV destination. Printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsFile {
    combined: Option<PathBuf>,
    baselines: Option<Vec<PathBuf>>,
    out: Option<PathBuf>,
}

/// Every `*.json` report in `dir`, named after the directory.
pub fn read_report_dir(dir: &Path) -> Result<ReportSet, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::data(format!("cannot read report directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::data(format!("no reports in {}", dir.display())));
    }
    let reports = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<EvalReport>(&text).map_err(|e| CliError::data(format!("{} is not a report: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReportSet::from_reports(dir_name(dir), &reports)?)
}

fn dir_name(dir: &Path) -> String {
    let resolved = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    resolved.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn run(args: &GainsArgs) -> Result<(), CliError> {
    let file = FileConfig::<GainsFile>::load(args.config.as_deref())?;
    let f = &file.values;
    let combined = require(args.combined.clone().or_else(|| file.path(&f.combined)), "combined")?;
    let from_file = f.baselines.as_ref().map(|b| b.iter().map(|p| file.resolve(p)).collect());
    let baselines = require(pick(&args.baselines, &from_file).filter(|b: &Vec<PathBuf>| !b.is_empty()), "baseline")?;
    let out = args.out.clone().or_else(|| file.path(&f.out));

    let combined = read_report_dir(&combined)?;
    let bases = baselines.iter().map(|d| read_report_dir(d)).collect::<Result<Vec<_>, _>>()?;
    let rows = compute_gains(&combined, &bases.iter().collect::<Vec<_>>())?;
    let csv = gains_csv(&rows);
    match out {
        Some(path) => write_output(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

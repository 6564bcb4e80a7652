use std::path::PathBuf;

use clap::{Args, Subcommand};
use skillgap::features::save_dataset;
use skillgap::synthetic::{gaussian_cloud, skill_dataset, SkillDataConfig};

use crate::error::CliError;

/// Writes seeded synthetic datasets (feature files plus manifest).
#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    kind: SynthKind,
}

#[derive(Debug, Subcommand)]
enum SynthKind {
    /// Two GRS-labelled Gaussian classes.
    Skill {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value_t = 17)]
        proficient: usize,
        #[arg(long, default_value_t = 16)]
        expert: usize,
        #[arg(long, default_value_t = 8)]
        snippets: usize,
        #[arg(long, default_value_t = 1)]
        frames: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        /// Distance between class means in noise sigmas.
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Unlabelled isotropic Gaussian rows shifted along the first axis.
    Cloud {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "cloud")]
        name: String,
        #[arg(long, default_value_t = 8)]
        videos: usize,
        #[arg(long, default_value_t = 8)]
        snippets: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    let (set, out) = match &args.kind {
        SynthKind::Skill { out, name, proficient, expert, snippets, frames, dim, separation, seed } => {
            if *snippets == 0 || *frames == 0 || *dim == 0 {
                return Err(CliError::config("--snippets, --frames and --dim must be at least 1"));
            }
            let cfg = SkillDataConfig {
                name: name.clone(),
                proficient: *proficient,
                expert: *expert,
                snippets: *snippets,
                frames_per_snippet: *frames,
                dim: *dim,
                separation: *separation,
                seed: *seed,
            };
            (skill_dataset(&cfg), out)
        }
        SynthKind::Cloud { out, name, videos, snippets, dim, shift, seed } => {
            if *snippets == 0 || *dim == 0 {
                return Err(CliError::config("--snippets and --dim must be at least 1"));
            }
            (gaussian_cloud(name, *videos, *snippets, *dim, *shift, *seed), out)
        }
    };
    let set = set.map_err(|e| CliError::config(e.to_string()))?;
    let path = save_dataset(&set, out).map_err(|e| CliError::config(e.to_string()))?;
    println!("wrote {} videos to {}", set.videos().len(), path.display());
    Ok(())
}

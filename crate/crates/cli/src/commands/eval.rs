use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use skillgap::features::load_manifest;
use skillgap::fewshot::{prepare_items, run_protocol, sample_episodes, HeadKind, ProtocolConfig, TrainConfig};
use skillgap::nn::Init;

use crate::config::{pick, require, to_json, write_output, FileConfig};
use crate::error::CliError;

/// Shot counts evaluated when none are given.
pub const DEFAULT_SHOTS: [usize; 3] = [1, 2, 5];

/// Few-shot skill classification over a labelled dataset.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON file with any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest whose videos all carry a GRS.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Heads to evaluate [default: linear,tcn]
    #[arg(long, value_delimiter = ',')]
    head: Option<Vec<HeadKind>>,
    /// Support samples per class [default: 1,2,5]
    #[arg(long, value_delimiter = ',')]
    shots: Option<Vec<usize>>,
    /// Accept shot counts outside 1, 2 and 5.
    #[arg(long)]
    allow_any_shots: bool,
    /// Episodes per (head, shot) cell [default: 100]
    #[arg(long)]
    episodes: Option<usize>,
    /// Master seed all episode seeds derive from [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs episodes serially [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Clamp GRS below 19 to the proficient class instead of failing.
    #[arg(long)]
    allow_extrapolation: bool,
    /// Training epochs per episode [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Base learning rate of the cosine schedule [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    adam_eps: Option<f64>,
    /// Decoupled weight decay, not applied to biases [default: 0.01]
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    tcn_layers: Option<usize>,
    #[arg(long)]
    tcn_channels: Option<usize>,
    /// Parameter initialization: uniform or zeros [default: uniform]
    #[arg(long)]
    init: Option<InitArg>,
    /// Directory receiving one `<head>_k<shot>.json` report per cell.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum InitArg {
    Uniform,
    Zeros,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalFile {
    manifest: Option<PathBuf>,
    heads: Option<Vec<HeadKind>>,
    shots: Option<Vec<usize>>,
    allow_any_shots: Option<bool>,
    episodes: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    allow_extrapolation: Option<bool>,
    train: Option<TrainConfig>,
    out: Option<PathBuf>,
}

impl EvalArgs {
    fn train_config(&self, base: TrainConfig) -> TrainConfig {
        let mut t = base;
        let o = &mut t.optimizer;
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        for (flag, slot) in [
            (self.lr, &mut o.base_lr),
            (self.beta1, &mut o.beta1),
            (self.beta2, &mut o.beta2),
            (self.adam_eps, &mut o.eps),
            (self.weight_decay, &mut o.weight_decay),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(v) = self.tcn_layers {
            t.tcn.layers = v;
        }
        if let Some(v) = self.tcn_channels {
            t.tcn.channels = v;
        }
        if let Some(init) = self.init {
            t.init = match init {
                InitArg::Uniform => Init::Uniform,
                InitArg::Zeros => Init::Zeros,
            };
        }
        t
    }
}

fn validate(train: &TrainConfig) -> Result<(), CliError> {
    let o = &train.optimizer;
    let checks = [
        (o.base_lr.is_finite() && o.base_lr >= 0.0, "--lr must be a non-negative number"),
        ((0.0..1.0).contains(&o.beta1), "--beta1 must lie in [0, 1)"),
        ((0.0..1.0).contains(&o.beta2), "--beta2 must lie in [0, 1)"),
        (o.eps > 0.0 && o.eps.is_finite(), "--adam-eps must be positive"),
        (o.weight_decay.is_finite() && o.weight_decay >= 0.0, "--weight-decay must be non-negative"),
        (train.tcn.layers >= 1 && train.tcn.channels >= 1, "--tcn-layers and --tcn-channels must be at least 1"),
        (train.tcn.layers <= 16, "--tcn-layers above 16 would overflow the dilation schedule"),
    ];
    match checks.iter().find(|(ok, _)| !ok) {
        Some((_, msg)) => Err(CliError::config(*msg)),
        None => Ok(()),
    }
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let file = FileConfig::<EvalFile>::load(args.config.as_deref())?;
    let f = &file.values;
    let manifest = require(args.manifest.clone().or_else(|| file.path(&f.manifest)), "manifest")?;
    let out = require(args.out.clone().or_else(|| file.path(&f.out)), "out")?;
    let heads = pick(&args.head, &f.heads).unwrap_or_else(|| HeadKind::ALL.to_vec());
    let shots = pick(&args.shots, &f.shots).unwrap_or_else(|| DEFAULT_SHOTS.to_vec());
    let allow_any_shots = args.allow_any_shots || f.allow_any_shots.unwrap_or(false);
    let allow_extrapolation = args.allow_extrapolation || f.allow_extrapolation.unwrap_or(false);
    let episodes = pick(&args.episodes, &f.episodes).unwrap_or(100);
    let seed = pick(&args.seed, &f.seed).unwrap_or(0);
    let threads = pick(&args.threads, &f.threads);
    let train = args.train_config(f.train.unwrap_or_default());

    if heads.is_empty() || shots.is_empty() {
        return Err(CliError::config("--head and --shots need at least one value"));
    }
    if let Some(&k) = shots.iter().find(|&&k| k == 0 || (!allow_any_shots && !DEFAULT_SHOTS.contains(&k))) {
        return Err(CliError::config(format!("unsupported shot count {k} (use 1, 2 or 5, or pass --allow-any-shots)")));
    }
    if episodes == 0 {
        return Err(CliError::config("--episodes must be at least 1"));
    }
    if threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    validate(&train)?;

    let set = load_manifest(&manifest)?;
    let items = prepare_items(&set, allow_extrapolation)?;
    // Check every shot count before training anything.
    for &k in &shots {
        sample_episodes(&items, k, 1, seed)?;
    }
    for &head in &heads {
        for &shot in &shots {
            let cfg = ProtocolConfig { head, shot, episodes, master_seed: seed, train, allow_extrapolation, threads };
            let report = run_protocol(set.name(), &items, &cfg)?;
            write_output(&out.join(format!("{head}_k{shot}.json")), &to_json(&report))?;
            println!("{head} k={shot}: {}", report.headline());
        }
    }
    Ok(())
}

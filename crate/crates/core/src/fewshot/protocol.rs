use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::sample_episodes;
use super::{aggregate, run_episode, FewShotError, HeadKind, LabeledItem, Metrics, Result, TrainConfig};
use crate::nn::TCN_VERSION;

/// Which F1 a report carries.
pub const F1_VARIANT: &str = "macro";

/// One (head, shot) cell of the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub head: HeadKind,
    pub shot: usize,
    pub episodes: usize,
    pub master_seed: u64,
    pub train: TrainConfig,
    pub allow_extrapolation: bool,
    /// Worker threads for episodes. `Some(1)` runs serially, `None` uses the
    /// global pool. Results do not depend on this.
    pub threads: Option<usize>,
}

impl ProtocolConfig {
    pub fn new(head: HeadKind, shot: usize) -> Self {
        Self { head, shot, episodes: 100, master_seed: 0, train: TrainConfig::default(), allow_extrapolation: false, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub dataset: String,
    pub head: HeadKind,
    pub shot: usize,
    pub episodes: usize,
    pub master_seed: u64,
    pub hyperparameters: TrainConfig,
    pub bias_weight_decay: bool,
    pub allow_extrapolation: bool,
    pub f1: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_version: Option<String>,
    pub episode_seeds: Vec<u64>,
    /// Support video ids per episode, class by class.
    pub episode_support: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub per_episode: Vec<Metrics>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

impl EvalReport {
    pub fn from_episodes(config: ReportConfig, per_episode: Vec<Metrics>) -> Result<Self> {
        let s = aggregate(&per_episode)?;
        Ok(Self { config, per_episode, mean_accuracy: s.mean_accuracy, std_accuracy: s.std_accuracy, mean_f1: s.mean_f1, std_f1: s.std_f1 })
    }

    /// `acc 73.65 ± 4.10 / f1 71.20 ± 5.02`
    pub fn headline(&self) -> String {
        format!("acc {:.2} ± {:.2} / f1 {:.2} ± {:.2}", self.mean_accuracy, self.std_accuracy, self.mean_f1, self.std_f1)
    }
}

/// Samples `cfg.episodes` episodes and runs each one. Episodes are
/// independent and merged in index order.
pub fn run_protocol(dataset: &str, items: &[LabeledItem], cfg: &ProtocolConfig) -> Result<EvalReport> {
    if cfg.episodes == 0 {
        return Err(FewShotError::InvalidArgument("episodes must be at least 1".into()));
    }
    let episodes = sample_episodes(items, cfg.shot, cfg.episodes, cfg.master_seed)?;
    let run = |ep: &super::Episode| run_episode(ep, items, cfg.head, &cfg.train);
    let per_episode: Vec<Metrics> = match cfg.threads {
        Some(1) => episodes.iter().map(run).collect::<Result<_>>()?,
        Some(0) => return Err(FewShotError::InvalidArgument("threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FewShotError::InvalidArgument(e.to_string()))?
            .install(|| episodes.par_iter().map(run).collect::<Result<_>>())?,
        None => episodes.par_iter().map(run).collect::<Result<_>>()?,
    };
    let config = ReportConfig {
        dataset: dataset.to_owned(),
        head: cfg.head,
        shot: cfg.shot,
        episodes: cfg.episodes,
        master_seed: cfg.master_seed,
        hyperparameters: cfg.train,
        bias_weight_decay: false,
        allow_extrapolation: cfg.allow_extrapolation,
        f1: F1_VARIANT.to_owned(),
        head_version: (cfg.head == HeadKind::Tcn).then(|| TCN_VERSION.to_owned()),
        episode_seeds: episodes.iter().map(|e| e.seed).collect(),
        episode_support: episodes.iter().map(|e| e.support.iter().map(|&i| items[i].video_id.clone()).collect()).collect(),
    };
    EvalReport::from_episodes(config, per_episode)
}

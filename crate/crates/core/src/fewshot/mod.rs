//! Episodic k-shot skill classification over precomputed video features:
//! GRS binarization, episode sampling, per-episode training of a head,
//! metrics, aggregation and gain tables.

mod episode;
mod gains;
mod metrics;
mod protocol;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{temporal_average, FeatureSet, VideoFeatures};
use crate::nn::NnError;

pub use episode::{episode_seed, sample_episodes, Episode};
pub use gains::{compute_gains, format_gain, gains_csv, GainRow, ReportCell, ReportSet};
pub use metrics::{aggregate, evaluate, Metrics, Summary};
pub use protocol::{run_protocol, EvalReport, ProtocolConfig, ReportConfig, F1_VARIANT};
pub use train::{run_episode, HeadKind, TrainConfig};

/// Lowest GRS of the proficient class.
pub const PROFICIENT_MIN: u32 = 19;
/// Lowest GRS of the expert class.
pub const EXPERT_MIN: u32 = 25;
/// Highest GRS on the scale.
pub const EXPERT_MAX: u32 = 30;

#[derive(Debug, Error)]
pub enum FewShotError {
    #[error("GRS {grs} is outside the {PROFICIENT_MIN}..={EXPERT_MAX} task range (pass allow-extrapolation to clamp)")]
    GrsOutOfTaskRange { grs: u32 },
    #[error("video {video_id:?} has no GRS label")]
    MissingGrs { video_id: String },
    #[error("{class} has {size} items but {shot}-shot episodes need at least {}", shot + 1)]
    InsufficientClassSize { class: SkillClass, size: usize, shot: usize },
    #[error("predictions and labels differ in length ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("report cells differ: {0}")]
    CellMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = FewShotError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillClass {
    Proficient = 0,
    Expert = 1,
}

impl SkillClass {
    pub const ALL: [SkillClass; 2] = [SkillClass::Proficient, SkillClass::Expert];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn flipped(self) -> Self {
        match self {
            SkillClass::Proficient => SkillClass::Expert,
            SkillClass::Expert => SkillClass::Proficient,
        }
    }
}

impl std::fmt::Display for SkillClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkillClass::Proficient => "proficient",
            SkillClass::Expert => "expert",
        })
    }
}

/// Maps a GRS onto the two skill classes. Scores below the proficient range
/// are rejected unless `allow_extrapolation` is set, in which case they
/// clamp to proficient.
pub fn binarize_grs(grs: u32, allow_extrapolation: bool) -> Result<SkillClass> {
    match grs {
        EXPERT_MIN..=EXPERT_MAX => Ok(SkillClass::Expert),
        PROFICIENT_MIN..=24 => Ok(SkillClass::Proficient),
        g if allow_extrapolation && (crate::features::GRS_MIN..PROFICIENT_MIN).contains(&g) => Ok(SkillClass::Proficient),
        _ => Err(FewShotError::GrsOutOfTaskRange { grs }),
    }
}

/// A video ready for the downstream task: snippet-level features and a class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub video_id: String,
    pub features: VideoFeatures,
    pub label: SkillClass,
}

impl LabeledItem {
    pub fn new(video: &VideoFeatures, allow_extrapolation: bool) -> Result<Self> {
        let grs = video.grs().ok_or_else(|| FewShotError::MissingGrs { video_id: video.video_id().to_owned() })?;
        Ok(Self {
            video_id: video.video_id().to_owned(),
            features: temporal_average(video),
            label: binarize_grs(grs, allow_extrapolation)?,
        })
    }
}

/// Labels every video of a set, in set order.
pub fn prepare_items(set: &FeatureSet, allow_extrapolation: bool) -> Result<Vec<LabeledItem>> {
    set.videos().iter().map(|v| LabeledItem::new(v, allow_extrapolation)).collect()
}

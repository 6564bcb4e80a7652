//! Dataset representation: per-video snippet feature tensors, the binary
//! feature-file format, manifests, snippet placement and temporal pooling.

mod format;
mod manifest;
mod sampling;

use std::path::PathBuf;

use thiserror::Error;

pub use format::{read_feature_file, read_features, write_feature_file, write_features, FORMAT_VERSION, MAGIC};
pub use manifest::{load_manifest, save_dataset, Manifest, ManifestEntry};
pub use sampling::{snippet_starts, temporal_average};

/// Smallest possible Global Rating Score (six categories scored 1 to 5).
pub const GRS_MIN: u32 = 6;
/// Largest possible Global Rating Score.
pub const GRS_MAX: u32 = 30;

/// Frames per snippet used by the default pipeline.
pub const DEFAULT_FRAMES_PER_SNIPPET: usize = 16;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot place {snippets} non-overlapping {len}-frame snippets in {frames} frames")]
    InfeasibleSampling { frames: usize, len: usize, snippets: usize },
    #[error("bad magic {found:?}, expected {:?}", MAGIC)]
    BadMagic { found: [u8; 4] },
    #[error("unsupported feature file version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: expected {expected} floats, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite feature value in video {video_id:?}")]
    NonFinite { video_id: String },
    #[error("feature file {0} not found")]
    MissingFile(PathBuf),
    #[error("video {video_id:?} has dim {found}, expected {expected}")]
    DimMismatchAcrossVideos { video_id: String, expected: usize, found: usize },
    #[error("duplicate video id {0:?}")]
    DuplicateVideoId(String),
    #[error("GRS {grs} of video {video_id:?} outside {GRS_MIN}..={GRS_MAX}")]
    GrsOutOfRange { video_id: String, grs: u32 },
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// Snippet features of one video: `num_snippets × frames_per_snippet × dim`
/// values in `[snippet][frame][dim]` order. After temporal averaging the
/// frame axis has length 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    video_id: String,
    frames_per_snippet: usize,
    num_snippets: usize,
    dim: usize,
    data: Vec<f64>,
    grs: Option<u32>,
}

impl VideoFeatures {
    pub fn new(video_id: impl Into<String>, num_snippets: usize, frames_per_snippet: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let video_id = video_id.into();
        if num_snippets == 0 || frames_per_snippet == 0 || dim == 0 {
            return Err(FeatureError::InvalidArgument(format!(
                "video {video_id:?}: K, L and d must all be at least 1 (got {num_snippets}, {frames_per_snippet}, {dim})"
            )));
        }
        let expected = num_snippets
            .checked_mul(frames_per_snippet)
            .and_then(|n| n.checked_mul(dim))
            .ok_or_else(|| FeatureError::InvalidArgument("tensor size overflows".into()))?;
        if data.len() != expected {
            return Err(FeatureError::DimensionMismatch(format!(
                "video {video_id:?}: shape {num_snippets}x{frames_per_snippet}x{dim} needs {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite { video_id });
        }
        Ok(Self { video_id, frames_per_snippet, num_snippets, dim, data, grs: None })
    }

    /// Snippet-level features (`L = 1`) from one row per snippet.
    pub fn from_snippet_rows(video_id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(FeatureError::DimensionMismatch("ragged snippet rows".into()));
        }
        Self::new(video_id, rows.len(), 1, dim, rows.concat())
    }

    pub fn with_grs(mut self, grs: u32) -> Result<Self> {
        if !(GRS_MIN..=GRS_MAX).contains(&grs) {
            return Err(FeatureError::GrsOutOfRange { video_id: self.video_id, grs });
        }
        self.grs = Some(grs);
        Ok(self)
    }

    pub fn with_video_id(mut self, video_id: impl Into<String>) -> Self {
        self.video_id = video_id.into();
        self
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn num_snippets(&self) -> usize {
        self.num_snippets
    }

    pub fn frames_per_snippet(&self) -> usize {
        self.frames_per_snippet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grs(&self) -> Option<u32> {
        self.grs
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Feature vector of frame `frame` in snippet `snippet`.
    pub fn frame(&self, snippet: usize, frame: usize) -> &[f64] {
        let start = (snippet * self.frames_per_snippet + frame) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Rows of the `K × d` snippet matrix. Only meaningful once `L = 1`.
    pub fn snippet_rows(&self) -> impl Iterator<Item = &[f64]> {
        debug_assert_eq!(self.frames_per_snippet, 1, "snippet rows requested before temporal averaging");
        self.data.chunks_exact(self.dim)
    }

    /// Mean of the snippet rows, one `d`-vector per video.
    pub fn pooled(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let rows = self.data.len() / self.dim;
        for row in self.data.chunks_exact(self.dim) {
            for (acc, &x) in out.iter_mut().zip(row) {
                *acc += x;
            }
        }
        for x in &mut out {
            *x /= rows as f64;
        }
        out
    }
}

/// A named dataset: an ordered list of videos sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    name: String,
    dim: usize,
    videos: Vec<VideoFeatures>,
}

impl FeatureSet {
    pub fn new(name: impl Into<String>, dim: usize, videos: Vec<VideoFeatures>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &videos {
            if v.dim != dim {
                return Err(FeatureError::DimMismatchAcrossVideos { video_id: v.video_id.clone(), expected: dim, found: v.dim });
            }
            if !seen.insert(v.video_id.as_str()) {
                return Err(FeatureError::DuplicateVideoId(v.video_id.clone()));
            }
        }
        Ok(Self { name: name.into(), dim, videos })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn videos(&self) -> &[VideoFeatures] {
        &self.videos
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// Number of rows of the flattened distribution (`Σ K_i`).
    pub fn num_rows(&self) -> usize {
        self.videos.iter().map(|v| v.num_snippets).sum()
    }

    /// The same set with every video averaged over its frame axis.
    pub fn temporal_averaged(&self) -> Self {
        Self { name: self.name.clone(), dim: self.dim, videos: self.videos.iter().map(temporal_average).collect() }
    }

    /// Snippet-level rows of all videos, concatenated in video order.
    /// Videos still carrying a frame axis are averaged first.
    pub fn flatten(&self) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.num_rows());
        for v in &self.videos {
            let v = if v.frames_per_snippet == 1 { std::borrow::Cow::Borrowed(v) } else { std::borrow::Cow::Owned(temporal_average(v)) };
            rows.extend(v.snippet_rows().map(<[f64]>::to_vec));
        }
        rows
    }
}

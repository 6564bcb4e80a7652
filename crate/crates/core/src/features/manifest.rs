use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_feature_file, write_feature_file, FeatureError, FeatureSet, Result};

/// JSON manifest describing a dataset. Feature file paths are relative to
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub dim: usize,
    pub videos: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grs: Option<u32>,
}

/// Loads a manifest and every feature file it references, in manifest order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => FeatureError::MissingFile(path.to_path_buf()),
        _ => FeatureError::Io(e),
    })?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut videos = Vec::with_capacity(manifest.videos.len());
    for entry in &manifest.videos {
        if let Some(grs) = entry.grs {
            if !(super::GRS_MIN..=super::GRS_MAX).contains(&grs) {
                return Err(FeatureError::GrsOutOfRange { video_id: entry.id.clone(), grs });
            }
        }
        let v = read_feature_file(base.join(&entry.file))?.with_video_id(entry.id.clone());
        if v.dim() != manifest.dim {
            return Err(FeatureError::DimMismatchAcrossVideos { video_id: entry.id.clone(), expected: manifest.dim, found: v.dim() });
        }
        videos.push(match entry.grs {
            Some(grs) => v.with_grs(grs)?,
            None => v,
        });
    }
    FeatureSet::new(manifest.name, manifest.dim, videos)
}

/// Writes every video of `set` to `dir/<id>.fsfb` plus `dir/manifest.json`
/// and returns the manifest path. Values are narrowed to `f32` on disk.
pub fn save_dataset(set: &FeatureSet, dir: impl AsRef<Path>) -> Result<std::path::PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut videos = Vec::with_capacity(set.videos().len());
    for v in set.videos() {
        let id = v.video_id();
        if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
            return Err(FeatureError::InvalidArgument(format!("video id {id:?} is not usable as a file name")));
        }
        let file = format!("{id}.fsfb");
        write_feature_file(v, dir.join(&file))?;
        videos.push(ManifestEntry { id: id.to_owned(), file, grs: v.grs() });
    }
    let manifest = Manifest { name: set.name().to_owned(), dim: set.dim(), videos };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

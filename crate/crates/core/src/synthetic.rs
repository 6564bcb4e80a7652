//! Seeded Gaussian datasets for fixtures and tests.
//!
//! Noise is isotropic with unit standard deviation per stored entry, so a
//! separation of `s` means class means `s` noise-sigmas apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::features::{FeatureSet, Result, VideoFeatures};
use crate::fewshot::{EXPERT_MAX, EXPERT_MIN, PROFICIENT_MIN};

/// Shape of a labelled two-class skill dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillDataConfig {
    pub name: String,
    pub proficient: usize,
    pub expert: usize,
    pub snippets: usize,
    pub frames_per_snippet: usize,
    pub dim: usize,
    /// Distance between class means in units of the noise sigma.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SkillDataConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            proficient: 17,
            expert: 16,
            snippets: 8,
            frames_per_snippet: 1,
            dim: 32,
            separation: 10.0,
            seed: 0,
        }
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Two classes centred at `∓separation/2` along a random unit direction,
/// with GRS drawn uniformly inside each class's range. Proficient videos
/// come first, ids `p000…`, then expert videos `e000…`.
pub fn skill_dataset(cfg: &SkillDataConfig) -> Result<FeatureSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dir: Vec<f64> = (0..cfg.dim).map(|_| normal(&mut rng)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    dir.iter_mut().for_each(|x| *x /= norm);

    let classes = [("p", cfg.proficient, -0.5, PROFICIENT_MIN..=EXPERT_MIN - 1), ("e", cfg.expert, 0.5, EXPERT_MIN..=EXPERT_MAX)];
    let values = cfg.snippets * cfg.frames_per_snippet * cfg.dim;
    let mut videos = Vec::with_capacity(cfg.proficient + cfg.expert);
    for (prefix, count, sign, grs_range) in classes {
        for v in 0..count {
            let data = (0..values).map(|j| sign * cfg.separation * dir[j % cfg.dim] + normal(&mut rng)).collect();
            let grs = rng.random_range(grs_range.clone());
            let video =
                VideoFeatures::new(format!("{prefix}{v:03}"), cfg.snippets, cfg.frames_per_snippet, cfg.dim, data)?.with_grs(grs)?;
            videos.push(video);
        }
    }
    FeatureSet::new(cfg.name.clone(), cfg.dim, videos)
}

/// `videos × snippets` rows drawn from `N(shift·e₁, I)`, grouped into
/// videos of `snippets` rows each. The noise depends only on `seed`, so
/// sets that differ only in `shift` are exact translates of each other.
pub fn gaussian_cloud(name: &str, videos: usize, snippets: usize, dim: usize, shift: f64, seed: u64) -> Result<FeatureSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let videos = (0..videos)
        .map(|v| {
            let data = (0..snippets * dim).map(|j| normal(&mut rng) + if j % dim == 0 { shift } else { 0.0 }).collect();
            VideoFeatures::new(format!("{name}-{v:04}"), snippets, 1, dim, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureSet::new(name, dim, videos)
}

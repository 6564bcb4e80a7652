use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{emd_exact, emd_sinkhorn, ground_cost, OtError, PointCloud, Result, SinkhornOptions};
use crate::features::FeatureSet;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Default cap on rows drawn from each dataset.
pub const DEFAULT_MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapConfig {
    pub max_points: usize,
    pub seed: u64,
    pub solver: Solver,
    /// Sinkhorn regularization as a fraction of the mean ground cost.
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self { max_points: DEFAULT_MAX_POINTS, seed: 0, solver: Solver::Exact, epsilon: 1e-3, max_iters: 10_000, tol: 1e-9 }
    }
}

/// Domain gap between two datasets plus the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapResult {
    pub value: f64,
    pub solver: Solver,
    pub epsilon: Option<f64>,
    pub max_points: usize,
    pub seed: u64,
    pub points_a: usize,
    pub points_b: usize,
}

/// Row indices kept by [`subsample`]: all rows when `rows ≤ max_points`,
/// otherwise a seeded uniform sample without replacement, in ascending order.
pub fn subsample_indices(rows: usize, max_points: usize, seed: u64) -> Vec<usize> {
    if rows <= max_points {
        return (0..rows).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, rows, max_points).into_vec();
    idx.sort_unstable();
    idx
}

/// Uniformly weighted cloud of (at most `max_points`) snippet rows of `set`.
pub fn subsample<T: Scalar>(set: &FeatureSet, max_points: usize, seed: u64) -> Result<PointCloud<T>> {
    if max_points == 0 {
        return Err(OtError::InvalidArgument("max_points must be at least 1".into()));
    }
    let rows = set.flatten();
    if rows.is_empty() {
        return Err(OtError::EmptySet);
    }
    let keep = subsample_indices(rows.len(), max_points, seed);
    let d = set.dim();
    let mut data = Vec::with_capacity(keep.len() * d);
    for &i in &keep {
        data.extend(rows[i].iter().map(|&x| T::lit(x)));
    }
    PointCloud::uniform(Matrix::from_vec(keep.len(), d, data).expect("row-major layout"))
}

/// Earth Mover's Distance between the snippet-feature distributions of two
/// datasets. Both sides are subsampled with the same seed, so
/// `domain_gap(x, x)` is zero and swapping the arguments only transposes the
/// problem.
pub fn domain_gap(a: &FeatureSet, b: &FeatureSet, cfg: &GapConfig) -> Result<GapResult> {
    if a.dim() != b.dim() {
        return Err(OtError::DimMismatch { a: a.dim(), b: b.dim() });
    }
    let pa = subsample::<f64>(a, cfg.max_points, cfg.seed)?;
    let pb = subsample::<f64>(b, cfg.max_points, cfg.seed)?;
    let value = match cfg.solver {
        Solver::Exact => emd_exact(&pa, &pb)?.cost,
        Solver::Sinkhorn => {
            if !(cfg.epsilon > 0.0) {
                return Err(OtError::InvalidArgument(format!("epsilon must be positive, got {}", cfg.epsilon)));
            }
            let mean_cost = ground_cost(&pa, &pb)?.mean_value();
            if mean_cost == 0.0 {
                0.0
            } else {
                let opts = SinkhornOptions { epsilon: cfg.epsilon * mean_cost, max_iters: cfg.max_iters, tol: cfg.tol };
                let r = emd_sinkhorn(&pa, &pb, &opts)?;
                if !r.converged {
                    return Err(OtError::NotConverged { iterations: r.iterations, error: r.marginal_error });
                }
                r.plan.cost
            }
        }
    };
    Ok(GapResult {
        value: value.max(0.0),
        solver: cfg.solver,
        epsilon: (cfg.solver == Solver::Sinkhorn).then_some(cfg.epsilon),
        max_points: cfg.max_points,
        seed: cfg.seed,
        points_a: pa.len(),
        points_b: pb.len(),
    })
}

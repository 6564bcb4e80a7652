//! Earth Mover's Distance between feature distributions.
//!
//! [`emd_exact`] solves the balanced transportation problem with a
//! transportation network simplex; [`emd_sinkhorn`] computes the
//! entropy-regularized plan by alternating marginal scaling. [`domain_gap`]
//! ties both to [`FeatureSet`](crate::features::FeatureSet)s via seeded
//! subsampling.

mod exact;
mod gap;
mod sinkhorn;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use exact::{emd_exact, solve_transport};
pub use gap::{domain_gap, subsample, subsample_indices, GapConfig, GapResult, Solver, DEFAULT_MAX_POINTS};
pub use sinkhorn::{emd_sinkhorn, SinkhornOptions, SinkhornResult, LOG_DOMAIN_RATIO};

#[derive(Debug, Error)]
pub enum OtError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("non-finite coordinate in point cloud")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical underflow in Sinkhorn scaling (epsilon {epsilon} too small for cost scale {cost_scale})")]
    NumericalUnderflow { epsilon: f64, cost_scale: f64 },
    #[error("Sinkhorn did not converge in {iterations} iterations (marginal error {error:e})")]
    NotConverged { iterations: usize, error: f64 },
    #[error("network simplex exceeded {0} pivots")]
    PivotLimit(usize),
    #[error("feature set is empty")]
    EmptySet,
}

pub type Result<T, E = OtError> = std::result::Result<T, E>;

/// Weighted point cloud: `M` points in `d` dimensions with positive weights
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Matrix<T>,
    weights: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    /// Uniform weights `1/M`.
    pub fn uniform(points: Matrix<T>) -> Result<Self> {
        let m = points.rows();
        if m == 0 {
            return Err(OtError::Degenerate("empty point cloud".into()));
        }
        let w = T::one() / T::of_usize(m);
        Self::weighted(points, vec![w; m])
    }

    pub fn weighted(points: Matrix<T>, weights: Vec<T>) -> Result<Self> {
        let m = points.rows();
        if m == 0 {
            return Err(OtError::Degenerate("empty point cloud".into()));
        }
        if points.cols() == 0 {
            return Err(OtError::Degenerate("zero-dimensional points".into()));
        }
        if weights.len() != m {
            return Err(OtError::InvalidWeights(format!("{} weights for {m} points", weights.len())));
        }
        if points.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite);
        }
        if weights.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(OtError::InvalidWeights("weights must be finite and strictly positive".into()));
        }
        let total: T = weights.iter().copied().sum();
        let tol = T::tolerance_floor().max(T::epsilon() * T::of_usize(m).sqrt() * T::lit(16.0));
        if (total - T::one()).abs() > tol {
            return Err(OtError::InvalidWeights(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { points, weights })
    }

    /// Uniform cloud from a list of rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let points = Matrix::from_rows(rows).ok_or_else(|| OtError::Degenerate("ragged point rows".into()))?;
        Self::uniform(points)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix<T> {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[T] {
        self.points.row(i)
    }

    /// Same cloud with every coordinate multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self { points: self.points.map(|x| x * s), weights: self.weights.clone() }
    }
}

/// Coupling between two clouds together with its transport cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub coupling: Matrix<T>,
    pub cost: T,
    pub ground_cost: Matrix<T>,
}

impl<T: Scalar> TransportPlan<T> {
    pub(crate) fn new(coupling: Matrix<T>, ground_cost: Matrix<T>) -> Self {
        let cost = coupling.dot(&ground_cost);
        Self { coupling, cost, ground_cost }
    }

    /// L1 violation of the row and column marginals, summed.
    pub fn marginal_error(&self, source: &[T], target: &[T]) -> T {
        let rows: T = self.coupling.row_sums().iter().zip(source).map(|(&r, &w)| (r - w).abs()).sum();
        let cols: T = self.coupling.col_sums().iter().zip(target).map(|(&c, &w)| (c - w).abs()).sum();
        rows + cols
    }
}

/// Pairwise Euclidean distances `C_ij = ‖a_i − b_j‖₂`.
pub fn ground_cost<T: Scalar>(a: &PointCloud<T>, b: &PointCloud<T>) -> Result<Matrix<T>> {
    if a.dim() != b.dim() {
        return Err(OtError::DimMismatch { a: a.dim(), b: b.dim() });
    }
    Ok(Matrix::from_fn(a.len(), b.len(), |i, j| a.point(i).iter().zip(b.point(j)).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()))
}

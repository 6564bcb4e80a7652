//! Trainable classification heads over frozen features, with explicit
//! reverse passes, softmax cross-entropy, AdamW and a cosine schedule.

mod gradcheck;
mod linear;
mod loss;
mod optim;
mod schedule;
mod tcn;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;

pub use gradcheck::grad_check;
pub use linear::LinearHead;
pub use loss::{ce_loss, softmax};
pub use optim::{adamw_update, AdamW, AdamWConfig};
pub use schedule::cosine_lr;
pub use tcn::{ConvLayer, TcnConfig, TcnHead, KERNEL_WIDTH, TCN_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

/// Flat views over a model's parameter tensors, in a fixed order.
pub trait Parameters<T> {
    fn tensors(&self) -> Vec<&[T]>;
    fn tensors_mut(&mut self) -> Vec<&mut [T]>;
    /// Whether each tensor takes weight decay. Biases do not.
    fn decay_mask(&self) -> Vec<bool>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// A classifier with an analytic reverse pass. Gradients are returned as a
/// head of the same shape.
pub trait Head<T: Scalar>: Parameters<T> + Clone {
    type Input: ?Sized;

    fn num_classes(&self) -> usize;

    fn forward(&self, x: &Self::Input) -> Result<Vec<T>>;

    /// Cross-entropy loss of `forward(x)` against `label` and its gradient
    /// with respect to every parameter.
    fn backward(&self, x: &Self::Input, label: usize) -> Result<(T, Self)>;

    /// Index of the largest logit; ties go to the lower class index.
    fn predict(&self, x: &Self::Input) -> Result<usize> {
        let logits = self.forward(x)?;
        let mut best = 0;
        for (i, &z) in logits.iter().enumerate().skip(1) {
            if z > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// How fresh parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// `U(−1/√fan_in, 1/√fan_in)` per layer, biases included.
    #[default]
    Uniform,
    Zeros,
}

pub(crate) fn init_tensor<T: Scalar, R: Rng + ?Sized>(len: usize, fan_in: usize, init: Init, rng: &mut R) -> Vec<T> {
    match init {
        Init::Zeros => vec![T::zero(); len],
        Init::Uniform => {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            (0..len).map(|_| T::lit(rng.random_range(-bound..=bound))).collect()
        }
    }
}

pub(crate) fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(NnError::LabelOutOfRange { label, classes });
    }
    Ok(())
}

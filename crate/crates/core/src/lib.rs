//! Domain-gap measurement between video feature datasets and a few-shot
//! skill-assessment evaluation protocol over precomputed snippet features.
//!
//! - [`features`]: per-video snippet tensors, binary feature files, manifests.
//! - [`ot`]: exact and entropy-regularized Earth Mover's Distance.
//! - [`nn`]: linear and temporal-convolutional heads trained with AdamW.
//! - [`fewshot`]: GRS binarization, episodic sampling, metrics and gains.
//! - [`synthetic`]: seeded Gaussian datasets for fixtures and tests.
//!
//! The transport solvers and heads are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the double-precision types the evaluation
//! pipeline uses.

pub mod features;
pub mod fewshot;
pub mod matrix;
pub mod nn;
pub mod ot;
pub mod scalar;
pub mod synthetic;

pub use matrix::Matrix;
pub use scalar::Scalar;

pub type PointCloud64 = ot::PointCloud<f64>;
pub type PointCloud32 = ot::PointCloud<f32>;
pub type TransportPlan64 = ot::TransportPlan<f64>;
pub type TransportPlan32 = ot::TransportPlan<f32>;
pub type LinearHead64 = nn::LinearHead<f64>;
pub type LinearHead32 = nn::LinearHead<f32>;
pub type TcnHead64 = nn::TcnHead<f64>;
pub type TcnHead32 = nn::TcnHead<f32>;
pub type AdamW64 = nn::AdamW<f64>;
pub type Matrix64 = Matrix<f64>;

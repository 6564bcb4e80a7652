use rand::Rng;

use super::{ce_loss, check_label, init_tensor, Head, Init, NnError, Parameters, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Linear probe `logits = W·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearHead<T> {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, num_classes: usize, init: Init, rng: &mut R) -> Self {
        let weight = init_tensor(num_classes * input_dim, input_dim, init, rng);
        let bias = init_tensor(num_classes, input_dim, init, rng);
        Self { weight: Matrix::from_vec(num_classes, input_dim, weight).expect("weight shape"), bias }
    }

    pub fn zeros(input_dim: usize, num_classes: usize) -> Self {
        Self { weight: Matrix::zeros(num_classes, input_dim), bias: vec![T::zero(); num_classes] }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(NnError::DimMismatch { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }

    /// Accumulates the gradient for upstream `dlogits` into `grad` and
    /// returns `Wᵀ·dlogits`.
    pub(crate) fn backprop(&self, x: &[T], dlogits: &[T], grad: &mut Self) -> Vec<T> {
        let mut dx = vec![T::zero(); x.len()];
        for (c, &dz) in dlogits.iter().enumerate() {
            grad.bias[c] += dz;
            for ((gw, &xi), (&w, dxi)) in grad.weight.row_mut(c).iter_mut().zip(x).zip(self.weight.row(c).iter().zip(dx.iter_mut())) {
                *gw += dz * xi;
                *dxi += dz * w;
            }
        }
        dx
    }
}

impl<T: Scalar> Parameters<T> for LinearHead<T> {
    fn tensors(&self) -> Vec<&[T]> {
        vec![self.weight.as_slice(), &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.weight.as_mut_slice(), &mut self.bias]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, false]
    }
}

impl<T: Scalar> Head<T> for LinearHead<T> {
    type Input = [T];

    fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok((0..self.num_classes()).map(|c| self.bias[c] + self.weight.row(c).iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>()).collect())
    }

    fn backward(&self, x: &[T], label: usize) -> Result<(T, Self)> {
        check_label(label, self.num_classes())?;
        let logits = self.forward(x)?;
        let (loss, dlogits) = ce_loss(&logits, label);
        let mut grad = Self::zeros(self.input_dim(), self.num_classes());
        self.backprop(x, &dlogits, &mut grad);
        Ok((loss, grad))
    }
}

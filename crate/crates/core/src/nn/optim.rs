use serde::{Deserialize, Serialize};

use super::{NnError, Parameters, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct AdamWConfig<T> {
    pub base_lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub weight_decay: T,
}

impl<T: Scalar> Default for AdamWConfig<T> {
    fn default() -> Self {
        Self { base_lr: T::lit(1e-3), beta1: T::lit(0.9), beta2: T::lit(0.999), eps: T::lit(1e-8), weight_decay: T::lit(0.01) }
    }
}

/// One AdamW update of a single parameter at step `t` (1-based).
///
/// `param ← param·(1 − lr·λ) − lr·m̂/(√v̂ + eps)`, with decay skipped when
/// `decay` is false.
#[allow(clippy::too_many_arguments)]
pub fn adamw_update<T: Scalar>(param: &mut T, grad: T, m: &mut T, v: &mut T, t: i32, cfg: &AdamWConfig<T>, lr: T, decay: bool) {
    let one = T::one();
    *m = cfg.beta1 * *m + (one - cfg.beta1) * grad;
    *v = cfg.beta2 * *v + (one - cfg.beta2) * grad * grad;
    let m_hat = *m / (one - cfg.beta1.powi(t));
    let v_hat = *v / (one - cfg.beta2.powi(t));
    let shrink = if decay { one - lr * cfg.weight_decay } else { one };
    *param = *param * shrink - lr * m_hat / (v_hat.sqrt() + cfg.eps);
}

/// AdamW optimizer state: first and second moments mirroring the parameter
/// tensors, and the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<T> {
    pub config: AdamWConfig<T>,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u32,
}

impl<T: Scalar> AdamW<T> {
    pub fn new<P: Parameters<T> + ?Sized>(config: AdamWConfig<T>, params: &P) -> Self {
        let zeros: Vec<Vec<T>> = params.tensors().iter().map(|t| vec![T::zero(); t.len()]).collect();
        Self { config, m: zeros.clone(), v: zeros, t: 0 }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn first_moments(&self) -> &[Vec<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<T>] {
        &self.v
    }

    pub fn step<P: Parameters<T> + ?Sized>(&mut self, params: &mut P, grads: &P, lr: T) -> Result<()> {
        let mask = params.decay_mask();
        let grads = grads.tensors();
        let mut tensors = params.tensors_mut();
        if tensors.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::DimMismatch { expected: self.m.len(), found: tensors.len() });
        }
        for (k, (p, g)) in tensors.iter().zip(&grads).enumerate() {
            if p.len() != self.m[k].len() || g.len() != self.m[k].len() {
                return Err(NnError::DimMismatch { expected: self.m[k].len(), found: p.len().min(g.len()) });
            }
        }
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        for (k, p) in tensors.iter_mut().enumerate() {
            for (i, x) in p.iter_mut().enumerate() {
                adamw_update(x, grads[k][i], &mut self.m[k][i], &mut self.v[k][i], t, &self.config, lr, mask[k]);
            }
        }
        Ok(())
    }
}

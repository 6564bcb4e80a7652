use super::{NnError, Result};
use crate::scalar::Scalar;

/// Cosine annealing from `base_lr` at epoch 0 down to zero at `total_epochs`.
pub fn cosine_lr<T: Scalar>(epoch: usize, total_epochs: usize, base_lr: T) -> Result<T> {
    if total_epochs == 0 {
        return Err(NnError::InvalidArgument("total_epochs must be at least 1".into()));
    }
    if epoch > total_epochs {
        return Err(NnError::InvalidArgument(format!("epoch {epoch} beyond total {total_epochs}")));
    }
    if epoch == total_epochs {
        return Ok(T::zero());
    }
    let progress = T::of_usize(epoch) / T::of_usize(total_epochs);
    let half = T::lit(0.5);
    Ok(base_lr * half * (T::one() + (T::lit(std::f64::consts::PI) * progress).cos()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        assert_eq!(cosine_lr(0, 30, 1e-3).unwrap(), 1e-3);
        assert_eq!(cosine_lr(30, 30, 1e-3).unwrap(), 0.0);
        assert!((cosine_lr(15, 30, 1e-3f64).unwrap() - 5e-4).abs() < 1e-18);
    }

    #[test]
    fn monotone_decreasing() {
        let lrs: Vec<f64> = (0..=30).map(|e| cosine_lr(e, 30, 1e-3).unwrap()).collect();
        assert!(lrs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(cosine_lr(31, 30, 1e-3f64).is_err());
        assert!(cosine_lr(0, 0, 1e-3f64).is_err());
    }
}

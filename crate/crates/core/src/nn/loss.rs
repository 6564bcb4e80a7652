use crate::scalar::Scalar;

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let mx = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - mx).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax cross-entropy `−log softmax(logits)[label]` and its gradient
/// `softmax(logits) − onehot(label)`.
///
/// Panics if `label` is out of range.
pub fn ce_loss<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    assert!(label < logits.len(), "label {label} out of range for {} logits", logits.len());
    let mx = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let log_total = logits.iter().map(|&z| (z - mx).exp()).sum::<T>().ln();
    let loss = (log_total - (logits[label] - mx)).max(T::zero());
    let mut grad = softmax(logits);
    grad[label] -= T::one();
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let (loss, grad) = ce_loss(&[0.0f64, 0.0], 0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn huge_margin_does_not_overflow() {
        let (loss, grad) = ce_loss(&[1000.0f64, 0.0], 0);
        assert!(loss.is_finite() && loss < 1e-300);
        assert!(grad.iter().all(|g: &f64| g.is_finite()));
        let (loss, _) = ce_loss(&[1000.0f64, 0.0], 1);
        assert!((loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let logits = [0.3f64, -1.2, 2.5, 0.05];
        let h = 1e-5;
        for label in 0..4 {
            let (_, grad) = ce_loss(&logits, label);
            for k in 0..4 {
                let mut up = logits;
                let mut down = logits;
                up[k] += h;
                down[k] -= h;
                let numeric = (ce_loss(&up, label).0 - ce_loss(&down, label).0) / (2.0 * h);
                let denom = grad[k].abs().max(numeric.abs()).max(1e-8);
                assert!((grad[k] - numeric).abs() / denom <= 1e-6, "label {label} k {k}");
            }
        }
    }

    proptest! {
        #[test]
        fn loss_is_non_negative(logits in prop::collection::vec(-50.0f64..50.0, 2..6), pick in 0usize..6) {
            let label = pick % logits.len();
            let (loss, grad) = ce_loss(&logits, label);
            prop_assert!(loss >= 0.0);
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}

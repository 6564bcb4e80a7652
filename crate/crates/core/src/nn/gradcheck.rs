use super::{ce_loss, Head};
use crate::scalar::Scalar;

/// Worst relative disagreement between the analytic gradient of
/// `ce_loss ∘ forward` and central differences with step `h`, over every
/// parameter. The denominator is `max(|analytic|, |numeric|, 1e-8)`.
///
/// Panics if `h` is not positive or `backward` rejects the inputs.
pub fn grad_check<T: Scalar, H: Head<T>>(head: &H, x: &H::Input, label: usize, h: T) -> T {
    assert!(h > T::zero(), "finite-difference step must be positive");
    let (_, analytic) = head.backward(x, label).expect("inputs valid for backward");
    let analytic: Vec<Vec<T>> = analytic.tensors().iter().map(|t| t.to_vec()).collect();

    let loss_at = |probe: &H| -> T {
        let logits = probe.forward(x).expect("inputs valid for forward");
        ce_loss(&logits, label).0
    };

    let floor = T::lit(1e-8);
    let two_h = h + h;
    let mut probe = head.clone();
    let mut worst = T::zero();
    for (k, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = probe.tensors()[k][i];
            probe.tensors_mut()[k][i] = original + h;
            let up = loss_at(&probe);
            probe.tensors_mut()[k][i] = original - h;
            let down = loss_at(&probe);
            probe.tensors_mut()[k][i] = original;

            let numeric = (up - down) / two_h;
            let denom = a.abs().max(numeric.abs()).max(floor);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

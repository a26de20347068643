use crate::sampler::ActiveSet;
use crate::scalar::Scalar;

/// Softmax cross-entropy restricted to the active ids.
///
/// The target spreads unit mass evenly over the true ids in the set.
/// Returns the loss and its gradient with respect to `logits`.
///
/// # Panics
/// If `active` holds no true label.
pub fn softmax_ce_active<T: Scalar>(logits: &[T], active: &ActiveSet) -> (T, Vec<T>) {
    assert_eq!(logits.len(), active.len(), "one logit per active id");
    let num_true = active.num_true();
    assert!(num_true > 0, "active set has no true label");
    let target = T::one() / T::of(num_true as f64);

    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut grad: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = grad.iter().copied().sum();
    let log_sum = sum.ln() + max;
    let mut loss = T::zero();
    for ((g, &z), &is_true) in grad.iter_mut().zip(logits).zip(active.true_mask()) {
        *g /= sum;
        if is_true {
            loss += target * (log_sum - z);
            *g -= target;
        }
    }
    (loss, grad)
}

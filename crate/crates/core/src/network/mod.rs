//! Sparse-input classifier trained on active class subsets.

mod adam;
mod checkpoint;
mod loss;
mod params;
mod schedule;
mod trainer;

pub use adam::{AdamConfig, AdamState, Gradients, RowGrads};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use loss::softmax_ce_active;
pub use params::{Hidden, NetworkParams};
pub use schedule::{maybe_update_tables, ScheduleState, TableRefresh, UpdateSchedule};
pub use trainer::{build_class_tables, StepReport, TrainSummary, Trainer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("input has dimension {got}, network expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("non-finite gradient for {param} row {row}; aborting before the update")]
    NonFiniteGradient { param: &'static str, row: usize },
    #[error("{0}")]
    Shape(String),
}

/// Adds one input's contribution to `grads`, scaled by `scale`.
///
/// `post` is the hidden activation, `dz` the loss gradient with respect to
/// the hidden pre-activation and `dlogits` the gradient with respect to
/// the active logits.
pub fn accumulate_sample<T: crate::scalar::Scalar>(
    grads: &mut Gradients<T>,
    features: &crate::vector::SparseVector<T>,
    post: &[T],
    dz: &[T],
    active: &crate::sampler::ActiveSet,
    dlogits: &[T],
    scale: T,
) {
    use crate::scalar::axpy;
    let h = post.len();
    let zero = T::zero();
    for (&id, &d) in active.ids().iter().zip(dlogits) {
        let g = d * scale;
        if g == zero {
            continue;
        }
        let row = grads.out.row_mut(id);
        axpy(g, post, &mut row[..h]);
        row[h] += g;
    }
    if dz.iter().all(|&v| v == zero) {
        return;
    }
    let dz: Vec<T> = dz.iter().map(|&v| v * scale).collect();
    for (j, x) in features.iter() {
        axpy(x, &dz, grads.input.row_mut(j as u32));
    }
    axpy(T::one(), &dz, &mut grads.b1);
}

/// Gradient of the loss with respect to the hidden pre-activation.
pub fn hidden_gradient<T: crate::scalar::Scalar>(
    params: &NetworkParams<T>,
    hidden: &Hidden<T>,
    active: &crate::sampler::ActiveSet,
    dlogits: &[T],
) -> Vec<T> {
    let mut de = vec![T::zero(); params.hidden_dim()];
    for (&id, &d) in active.ids().iter().zip(dlogits) {
        if d != T::zero() {
            crate::scalar::axpy(d, params.w_out.row(id as usize), &mut de);
        }
    }
    for (g, &z) in de.iter_mut().zip(&hidden.pre) {
        if z <= T::zero() {
            *g = T::zero();
        }
    }
    de
}

/// One optimizer step on a single input: gradients of the active rows and
/// of the input rows at nonzero features, then a lazy Adam update.
///
/// Returns the class rows that changed.
pub fn backward_update<T: crate::scalar::Scalar>(
    features: &crate::vector::SparseVector<T>,
    hidden: &Hidden<T>,
    dlogits: &[T],
    active: &crate::sampler::ActiveSet,
    params: &mut NetworkParams<T>,
    adam: &mut AdamState<T>,
) -> Result<Vec<u32>, NetworkError> {
    let dz = hidden_gradient(params, hidden, active, dlogits);
    let mut grads = Gradients::for_params(params);
    accumulate_sample(&mut grads, features, &hidden.post, &dz, active, dlogits, T::one());
    adam.apply(params, &grads)
}

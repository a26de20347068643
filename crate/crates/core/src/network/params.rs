use rand::Rng;

use super::NetworkError;
use crate::sampler::ActiveSet;
use crate::scalar::{axpy, dot, Scalar};
use crate::vector::{DenseVector, Matrix, SparseVector};

/// Weights of the sparse-input, one-hidden-layer classifier.
///
/// Row `j` of `w1` holds the weights from input feature `j` to every hidden
/// unit; row `i` of `w_out` is the class vector of class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub w1: Matrix<T>,
    pub b1: Vec<T>,
    pub w_out: Matrix<T>,
    pub b_out: Vec<T>,
}

/// Hidden-layer values kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Hidden<T> {
    pub pre: Vec<T>,
    pub post: Vec<T>,
}

fn glorot<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, fan: usize, rng: &mut R) -> Matrix<T> {
    let bound = (6.0 / fan as f64).sqrt();
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| T::of(rng.random_range(-bound..bound)))
            .collect(),
    )
}

impl<T: Scalar> NetworkParams<T> {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let w1 = glorot(input_dim, hidden, input_dim + hidden, rng);
        let w_out = glorot(classes, hidden, hidden + classes, rng);
        Self {
            w1,
            b1: vec![T::zero(); hidden],
            w_out,
            b_out: vec![T::zero(); classes],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.w_out.rows()
    }

    /// `relu(W1ᵀx + b1)`, touching only the rows of `W1` at nonzeros of `x`.
    pub fn forward_hidden(&self, x: &SparseVector<T>) -> Result<Hidden<T>, NetworkError> {
        use crate::vector::HashInput;
        if x.dim() != self.input_dim() {
            return Err(NetworkError::InputDim {
                expected: self.input_dim(),
                got: x.dim(),
            });
        }
        let mut pre = self.b1.clone();
        for (j, v) in x.iter() {
            axpy(v, self.w1.row(j), &mut pre);
        }
        let post = pre.iter().map(|&z| z.max(T::zero())).collect();
        Ok(Hidden { pre, post })
    }

    pub fn forward_embedding(&self, x: &SparseVector<T>) -> Result<DenseVector<T>, NetworkError> {
        let post = self.forward_hidden(x)?.post;
        DenseVector::new(post).map_err(|_| NetworkError::NonFinite("hidden activation"))
    }

    /// `w_i · e + b_i` for the active classes only, in active-set order.
    pub fn forward_output_active(&self, e: &[T], active: &ActiveSet) -> Vec<T> {
        active
            .ids()
            .iter()
            .map(|&i| dot(self.w_out.row(i as usize), e) + self.b_out[i as usize])
            .collect()
    }

    pub fn full_logits(&self, e: &[T]) -> Vec<T> {
        self.w_out
            .iter_rows()
            .zip(&self.b_out)
            .map(|(w, &b)| dot(w, e) + b)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        [self.w1.as_slice(), &self.b1, self.w_out.as_slice(), &self.b_out]
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

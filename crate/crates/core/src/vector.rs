//! Dense and sparse vectors plus a row-major matrix.

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("duplicate index {0}")]
    DuplicateIndex(usize),
    #[error("indices and values differ in length ({indices} vs {values})")]
    LengthMismatch { indices: usize, values: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// A vector that can be fed to a hash family.
///
/// Dense vectors expose every coordinate; sparse vectors expose only their
/// stored nonzeros. DWTA treats unexposed coordinates as absent, which is
/// what makes empty bins (and densification) possible.
pub trait HashInput<T: Scalar> {
    fn dim(&self) -> usize;

    fn for_each_entry<F: FnMut(usize, T)>(&self, f: F);

    /// Inner product with a dense vector of the same dimension.
    fn dot_dense(&self, w: &[T]) -> T;

    fn is_zero(&self) -> bool {
        let mut zero = true;
        self.for_each_entry(|_, v| {
            if v != T::zero() {
                zero = false;
            }
        });
        zero
    }
}

impl<T: Scalar> HashInput<T> for [T] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn for_each_entry<F: FnMut(usize, T)>(&self, mut f: F) {
        for (i, &v) in self.iter().enumerate() {
            f(i, v);
        }
    }

    fn dot_dense(&self, w: &[T]) -> T {
        dot(self, w)
    }

    fn is_zero(&self) -> bool {
        self.iter().all(|&v| v == T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<T>(Vec<T>);

impl<T: Scalar> DenseVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, VectorError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> std::ops::Deref for DenseVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> HashInput<T> for DenseVector<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn for_each_entry<F: FnMut(usize, T)>(&self, f: F) {
        self.0.as_slice().for_each_entry(f)
    }

    fn dot_dense(&self, w: &[T]) -> T {
        dot(&self.0, w)
    }
}

/// Index/value pairs with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from already-sorted parts, validating every invariant.
    pub fn new(dim: usize, indices: Vec<u32>, values: Vec<T>) -> Result<Self, VectorError> {
        if indices.len() != values.len() {
            return Err(VectorError::LengthMismatch {
                indices: indices.len(),
                values: values.len(),
            });
        }
        for (k, &i) in indices.iter().enumerate() {
            if i as usize >= dim {
                return Err(VectorError::IndexOutOfRange {
                    index: i as usize,
                    dim,
                });
            }
            if k > 0 && indices[k - 1] >= i {
                return Err(VectorError::DuplicateIndex(i as usize));
            }
            if !values[k].is_finite() {
                return Err(VectorError::NonFinite(i as usize));
            }
        }
        let mut v = Self {
            dim,
            indices,
            values,
        };
        v.drop_zeros();
        Ok(v)
    }

    /// Builds from unordered pairs. Zeros are dropped; duplicates rejected.
    pub fn from_pairs(
        dim: usize,
        pairs: impl IntoIterator<Item = (u32, T)>,
    ) -> Result<Self, VectorError> {
        let mut pairs: Vec<(u32, T)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(dim, indices, values)
    }

    /// One-hot vector with a single unit entry.
    pub fn one_hot(dim: usize, index: u32) -> Result<Self, VectorError> {
        Self::new(dim, vec![index], vec![T::one()])
    }

    pub fn from_dense(values: &[T]) -> Self {
        let mut indices = Vec::new();
        let mut vals = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v != T::zero() {
                indices.push(i as u32);
                vals.push(v);
            }
        }
        Self {
            dim: values.len(),
            indices,
            values: vals,
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().any(|&v| v == T::zero()) {
            let mut k = 0;
            for j in 0..self.values.len() {
                if self.values[j] != T::zero() {
                    self.indices[k] = self.indices[j];
                    self.values[k] = self.values[j];
                    k += 1;
                }
            }
            self.indices.truncate(k);
            self.values.truncate(k);
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out.drop_zeros();
        out
    }

    /// Rescales to unit Euclidean norm; the zero vector is left as is.
    pub fn normalize(&mut self) {
        let n = crate::scalar::norm(&self.values);
        if n > T::zero() {
            for v in &mut self.values {
                *v /= n;
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> SparseVector<U> {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

impl<T: Scalar> HashInput<T> for SparseVector<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn for_each_entry<F: FnMut(usize, T)>(&self, mut f: F) {
        for (i, v) in self.iter() {
            f(i, v);
        }
    }

    fn dot_dense(&self, w: &[T]) -> T {
        let mut acc = T::zero();
        for (i, v) in self.iter() {
            acc += v * w[i];
        }
        acc
    }

    fn is_zero(&self) -> bool {
        self.values.is_empty()
    }
}

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_rejects_bad_input() {
        assert_eq!(
            SparseVector::<f64>::new(3, vec![0, 3], vec![1.0, 1.0]),
            Err(VectorError::IndexOutOfRange { index: 3, dim: 3 })
        );
        assert_eq!(
            SparseVector::<f64>::new(3, vec![1, 1], vec![1.0, 1.0]),
            Err(VectorError::DuplicateIndex(1))
        );
        assert!(SparseVector::<f64>::from_pairs(4, [(2, 1.0), (2, 3.0)]).is_err());
        assert!(SparseVector::<f64>::new(4, vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn sparse_sorts_and_drops_zeros() {
        let v = SparseVector::<f64>::from_pairs(5, [(3, 2.0), (0, 0.0), (1, -1.0)]).unwrap();
        assert_eq!(v.indices(), &[1, 3]);
        assert_eq!(v.values(), &[-1.0, 2.0]);
        assert_eq!(v.to_dense(), vec![0.0, -1.0, 0.0, 2.0, 0.0]);
        assert_eq!(SparseVector::from_dense(&v.to_dense()), v);
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let v = SparseVector::<f64>::from_pairs(4, [(0, 2.0), (2, -1.0)]).unwrap();
        let w = [1.0, 5.0, 3.0, 7.0];
        assert_eq!(v.dot_dense(&w), -1.0);
        assert_eq!(v.to_dense().as_slice().dot_dense(&w), -1.0);
    }

    #[test]
    fn matrix_rows() {
        let m = Matrix::from_vec(2, 3, vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(m.iter_rows().count(), 2);
    }
}

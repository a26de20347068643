use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_input, fold_codes, HashError, MAX_BUCKETS_PER_TABLE};
use crate::scalar::Scalar;
use crate::vector::HashInput;

/// Signed random projections: bit `j` of a vector is `dot(v, plane_j) > 0`,
/// with plane entries drawn i.i.d. from N(0, 1).
#[derive(Debug, Clone)]
pub struct SimHashFamily<T> {
    dim: usize,
    k: usize,
    l: usize,
    seed: u64,
    planes: Vec<T>,
}

impl<T: Scalar> SimHashFamily<T> {
    pub fn new(dim: usize, k: usize, l: usize, seed: u64) -> Result<Self, HashError> {
        if dim == 0 {
            return Err(HashError::InvalidParam("dimension must be >= 1".into()));
        }
        if k == 0 || l == 0 {
            return Err(HashError::InvalidParam("K and L must be >= 1".into()));
        }
        if k >= 31 || (1usize << k) > MAX_BUCKETS_PER_TABLE {
            return Err(HashError::InvalidParam(format!(
                "K={k} gives more than {MAX_BUCKETS_PER_TABLE} buckets per table"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planes = (0..k * l * dim)
            .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Ok(Self {
            dim,
            k,
            l,
            seed,
            planes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn buckets_per_table(&self) -> usize {
        1 << self.k
    }

    pub fn plane(&self, index: usize) -> &[T] {
        &self.planes[index * self.dim..(index + 1) * self.dim]
    }

    /// The `K * L` sign bits in function order.
    pub fn bits<V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<Vec<bool>, HashError> {
        check_input(v, self.dim)?;
        Ok(self
            .planes
            .chunks_exact(self.dim)
            .map(|plane| v.dot_dense(plane) > T::zero())
            .collect())
    }

    pub fn codes<V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<Vec<u32>, HashError> {
        let symbols: Vec<u32> = self.bits(v)?.into_iter().map(u32::from).collect();
        Ok(fold_codes(&symbols, self.k, 2))
    }
}

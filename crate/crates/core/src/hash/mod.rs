//! LSH families and their meta-hash bucket codes.
//!
//! A family holds `K * L` hash functions. Hashing a vector yields `L` bucket
//! codes, one per table; code `t` concatenates the symbols of functions
//! `t*K .. t*K + K`, least significant symbol first (base 2 for SimHash,
//! base `m` for DWTA).

mod dwta;
mod prob;
mod simhash;

pub use dwta::{densify, DwtaFamily, ProbeHash};
pub use prob::{retrieval_prob, simhash_collision_prob};
pub use simhash::SimHashFamily;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::vector::HashInput;

/// Bucket-count ceiling for one table; direct addressing must stay in memory.
pub const MAX_BUCKETS_PER_TABLE: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HashError {
    #[error("dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("all-zero input has no defined hash")]
    Degenerate,
    #[error("invalid hash parameter: {0}")]
    InvalidParam(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    SimHash,
    Dwta,
}

impl std::str::FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simhash" => Ok(Self::SimHash),
            "dwta" => Ok(Self::Dwta),
            other => Err(format!("unknown hash family `{other}` (expected simhash or dwta)")),
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SimHash => "simhash",
            Self::Dwta => "dwta",
        })
    }
}

/// Folds `K * L` per-function symbols into `L` codes of base `radix`.
pub(crate) fn fold_codes(symbols: &[u32], k: usize, radix: u32) -> Vec<u32> {
    symbols
        .chunks_exact(k)
        .map(|chunk| {
            chunk
                .iter()
                .rev()
                .fold(0u32, |code, &s| code * radix + s)
        })
        .collect()
}

pub(crate) fn check_input<T: Scalar, V: HashInput<T> + ?Sized>(
    v: &V,
    dim: usize,
) -> Result<(), HashError> {
    if v.dim() != dim {
        return Err(HashError::DimensionMismatch {
            expected: dim,
            got: v.dim(),
        });
    }
    if v.is_zero() {
        return Err(HashError::Degenerate);
    }
    Ok(())
}

/// Either family, chosen at run time from configuration.
#[derive(Debug, Clone)]
pub enum HashFamily<T> {
    SimHash(SimHashFamily<T>),
    Dwta(DwtaFamily),
}

impl<T: Scalar> HashFamily<T> {
    /// `bin_size` is only read for DWTA.
    pub fn new(
        kind: FamilyKind,
        dim: usize,
        k: usize,
        l: usize,
        bin_size: usize,
        seed: u64,
    ) -> Result<Self, HashError> {
        Ok(match kind {
            FamilyKind::SimHash => Self::SimHash(SimHashFamily::new(dim, k, l, seed)?),
            FamilyKind::Dwta => Self::Dwta(DwtaFamily::new(dim, k, l, bin_size, seed)?),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::SimHash(_) => FamilyKind::SimHash,
            Self::Dwta(_) => FamilyKind::Dwta,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::SimHash(f) => f.k(),
            Self::Dwta(f) => f.k(),
        }
    }

    pub fn l(&self) -> usize {
        match self {
            Self::SimHash(f) => f.l(),
            Self::Dwta(f) => f.l(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SimHash(f) => f.dim(),
            Self::Dwta(f) => f.dim(),
        }
    }

    pub fn buckets_per_table(&self) -> usize {
        match self {
            Self::SimHash(f) => f.buckets_per_table(),
            Self::Dwta(f) => f.buckets_per_table(),
        }
    }

    /// Number of individual hash-function evaluations behind one `codes` call.
    pub fn evals_per_vector(&self) -> usize {
        self.k() * self.l()
    }

    pub fn codes<V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<Vec<u32>, HashError> {
        match self {
            Self::SimHash(f) => f.codes(v),
            Self::Dwta(f) => f.codes(v),
        }
    }
}

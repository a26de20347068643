//! Locality-sensitive negative sampling: candidates are whatever the hash
//! tables over the output class vectors return for a query.
//!
//! * LNS-Label queries with the class vector of one true label; class `i`
//!   comes back with probability `1 - (1 - p(w_y, w_i)^K)^L`.
//! * LNS-Embedding queries with the penultimate activation of the input;
//!   class `i` comes back with probability `1 - (1 - p(E_x, w_i)^K)^L`.
//!
//! Either way the cost is one query, independent of the number of classes.

use rand::Rng;

use super::SamplerError;
use crate::hash::HashError;
use crate::scalar::Scalar;
use crate::tables::{CandidateSet, LshTables};
use crate::vector::Matrix;

/// Queries with the class vector of one uniformly chosen true label and
/// drops the true labels from the result. An all-zero class vector yields
/// an empty set (the caller pads).
pub fn sample_lns_label<T: Scalar, R: Rng + ?Sized>(
    labels: &[u32],
    class_vectors: &Matrix<T>,
    tables: &LshTables<T>,
    rng: &mut R,
) -> Result<CandidateSet, SamplerError> {
    if labels.is_empty() {
        return Err(SamplerError::EmptyLabels);
    }
    let pick = labels[rng.random_range(0..labels.len())];
    Ok(query_excluding(tables, class_vectors.row(pick as usize), labels)?.0)
}

/// Queries with the input embedding and drops the true labels.
pub fn sample_lns_embedding<T: Scalar>(
    embedding: &[T],
    labels: &[u32],
    tables: &LshTables<T>,
) -> Result<CandidateSet, SamplerError> {
    Ok(query_excluding(tables, embedding, labels)?.0)
}

/// Query result minus `labels`, and whether the query was all zero.
pub(super) fn query_excluding<T: Scalar>(
    tables: &LshTables<T>,
    query: &[T],
    labels: &[u32],
) -> Result<(CandidateSet, bool), SamplerError> {
    match tables.query(query) {
        Ok(c) => Ok((c.without(labels), false)),
        Err(HashError::Degenerate) => {
            log::debug!("all-zero query vector, no candidates retrieved");
            Ok((CandidateSet::default(), true))
        }
        Err(e) => Err(e.into()),
    }
}

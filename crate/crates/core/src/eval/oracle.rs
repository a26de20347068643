//! Exact-scan references for retrieval tests.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scalar::{dot, norm, Scalar};
use crate::vector::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Cosine,
    InnerProduct,
    /// Fraction of coordinate pairs the two vectors order the same way.
    RankAgreement,
}

impl Similarity {
    pub fn score<T: Scalar>(self, a: &[T], b: &[T]) -> f64 {
        match self {
            Self::InnerProduct => dot(a, b).as_f64(),
            Self::Cosine => {
                let d = norm(a).as_f64() * norm(b).as_f64();
                if d == 0.0 {
                    0.0
                } else {
                    dot(a, b).as_f64() / d
                }
            }
            Self::RankAgreement => {
                let n = a.len();
                if n < 2 {
                    return 1.0;
                }
                let mut agree = 0usize;
                for i in 0..n {
                    for j in i + 1..n {
                        if a[i].partial_cmp(&a[j]) == b[i].partial_cmp(&b[j]) {
                            agree += 1;
                        }
                    }
                }
                agree as f64 / (n * (n - 1) / 2) as f64
            }
        }
    }
}

/// The `k` rows of `vectors` most similar to `query`, best first, ties to
/// the lower id.
pub fn brute_force_similar<T: Scalar>(query: &[T], vectors: &Matrix<T>, metric: Similarity, k: usize) -> Vec<u32> {
    let mut scored: Vec<(f64, u32)> = vectors
        .iter_rows()
        .enumerate()
        .map(|(i, r)| (metric.score(query, r), i as u32))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|s| s.1).collect()
}

/// Ranks starting at 1, ties sharing their mean rank.
fn mean_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with tie-averaged ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (mean_ranks(a), mean_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

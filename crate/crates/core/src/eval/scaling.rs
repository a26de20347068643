use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::hash::{FamilyKind, HashFamily};
use crate::scalar::Scalar;
use crate::seed::{derive_indexed, derive_seed, StreamRng};
use crate::tables::{LshTables, TableError};
use crate::vector::Matrix;

/// Table parameters held fixed across class counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub dim: usize,
    pub family: FamilyKind,
    pub k: usize,
    pub l: usize,
    pub bin_size: usize,
    pub capacity: Option<usize>,
    pub queries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub num_classes: usize,
    pub mean_query_s: f64,
    pub hash_evals_per_query: f64,
    pub mean_candidates: f64,
}

fn gaussian_rows<T: Scalar>(n: usize, d: usize, seed: u64) -> Matrix<T> {
    let mut rng = StreamRng::seed_from_u64(seed);
    Matrix::from_vec(n, d, (0..n * d).map(|_| T::of(rng.sample(StandardNormal))).collect())
}

/// For each class count, fills tables with Gaussian class vectors and times
/// `queries` Gaussian queries.
pub fn query_cost_scaling<T: Scalar>(class_counts: &[usize], p: &ScalingParams) -> Result<Vec<ScalingRow>, TableError> {
    let fam_seed = derive_seed(p.seed, "bench-hash");
    let queries: Matrix<T> = gaussian_rows(p.queries, p.dim, derive_seed(p.seed, "bench-queries"));
    class_counts
        .iter()
        .map(|&n| {
            let family = HashFamily::new(p.family, p.dim, p.k, p.l, p.bin_size, fam_seed)?;
            let w: Matrix<T> = gaussian_rows(n, p.dim, derive_indexed(derive_seed(p.seed, "bench-classes"), n as u64));
            let mut tables = LshTables::build(
                family,
                p.capacity,
                derive_seed(p.seed, "bench-tables"),
                w.iter_rows().enumerate().map(|(i, r)| (i as u32, r)),
            )?;
            tables.reset_stats();
            let mut retrieved = 0usize;
            let start = Instant::now();
            for q in queries.iter_rows() {
                retrieved += tables.query(q)?.len();
            }
            let elapsed = start.elapsed().as_secs_f64();
            let stats = tables.stats();
            let nq = p.queries.max(1) as f64;
            Ok(ScalingRow {
                num_classes: n,
                mean_query_s: elapsed / nq,
                hash_evals_per_query: stats.hash_evals as f64 / nq,
                mean_candidates: retrieved as f64 / nq,
            })
        })
        .collect()
}

//! Precision metrics, metrics files, the sampler adaptivity probe, query
//! cost measurement and exact-scan oracles.

mod metrics;
mod oracle;
mod precision;
mod probe;
mod scaling;

pub use metrics::{emit_metrics, read_metrics, MetricsRecord, MetricsWriter, METRICS_HEADER};
pub use oracle::{brute_force_similar, spearman, Similarity};
pub use precision::{precision_at_k, top_k_ids};
pub use probe::{adaptivity_probe, total_variation, AdaptivityReport};
pub use scaling::{query_cost_scaling, ScalingParams, ScalingRow};

use rayon::prelude::*;

use crate::data::Sample;
use crate::network::{NetworkError, NetworkParams};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("k must satisfy 1 <= k <= {num_classes}, got {k}")]
    InvalidK { k: usize, num_classes: usize },
    #[error("metrics file line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mean precision over the samples that have at least one in-range label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub p_at_1: f64,
    pub p_at_k: f64,
    pub k: usize,
    pub counted: usize,
}

/// Scores every class for every sample and averages P@1 and P@k.
/// `parallel` spreads samples over the current rayon pool.
pub fn evaluate_full<T: Scalar>(
    params: &NetworkParams<T>,
    samples: &[Sample<T>],
    k: usize,
    parallel: bool,
) -> Result<EvalSummary, EvalError> {
    let n = params.num_classes();
    if k == 0 || k > n {
        return Err(EvalError::InvalidK { k, num_classes: n });
    }
    let score = |s: &Sample<T>| -> Result<Option<(f64, f64)>, EvalError> {
        let truth: Vec<u32> = s.labels.iter().copied().filter(|&l| (l as usize) < n).collect();
        let e = params.forward_embedding(&s.features)?;
        let ranked = top_k_ids(&params.full_logits(&e), k);
        let p1 = precision_at_k(&ranked, &truth, 1, n)?;
        let pk = precision_at_k(&ranked, &truth, k, n)?;
        Ok(p1.zip(pk))
    };
    let scores: Vec<Option<(f64, f64)>> = if parallel {
        samples.par_iter().map(score).collect::<Result<_, _>>()?
    } else {
        samples.iter().map(score).collect::<Result<_, _>>()?
    };
    let counted: Vec<(f64, f64)> = scores.into_iter().flatten().collect();
    let m = counted.len().max(1) as f64;
    Ok(EvalSummary {
        p_at_1: counted.iter().map(|c| c.0).sum::<f64>() / m,
        p_at_k: counted.iter().map(|c| c.1).sum::<f64>() / m,
        k,
        counted: counted.len(),
    })
}

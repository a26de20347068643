//! Per-input active class sets: the true labels plus sampled negatives.

mod baselines;
mod freq;
mod lns;

pub use baselines::{sample_frequency, sample_log_uniform, sample_uniform, top_k_candidates};
pub use freq::FrequencyTable;
pub use lns::{sample_lns_embedding, sample_lns_label};

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hash::HashError;
use crate::scalar::Scalar;
use crate::tables::{CandidateSet, LshTables};
use crate::vector::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("label set is empty")]
    EmptyLabels,
    #[error("requested {requested} distinct negatives but only {available} classes are eligible")]
    TooManyNegatives { requested: usize, available: usize },
    #[error("no sampling mass left after exclusions")]
    NoMass,
    #[error("k must satisfy 1 <= k <= {num_classes}, got {k}")]
    InvalidK { k: usize, num_classes: usize },
    #[error("sampler `{0}` needs {1}")]
    MissingInput(SamplerKind, &'static str),
    #[error(transparent)]
    Hash(#[from] HashError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Full,
    LnsLabel,
    LnsEmbedding,
    Uniform,
    LogUniform,
    Frequency,
    TopK,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        Self::Full,
        Self::LnsLabel,
        Self::LnsEmbedding,
        Self::Uniform,
        Self::LogUniform,
        Self::Frequency,
        Self::TopK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::LnsLabel => "lns_label",
            Self::LnsEmbedding => "lns_embedding",
            Self::Uniform => "uniform",
            Self::LogUniform => "log_uniform",
            Self::Frequency => "frequency",
            Self::TopK => "top_k",
        }
    }

    pub fn uses_tables(self) -> bool {
        matches!(self, Self::LnsLabel | Self::LnsEmbedding)
    }

    /// Samplers with a known per-class proposal probability.
    pub fn has_proposal(self) -> bool {
        matches!(self, Self::Uniform | Self::LogUniform | Self::Frequency)
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                format!("unknown sampler `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Classes computed in the last layer for one input: true labels first,
/// then negatives in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    ids: Vec<u32>,
    true_mask: Vec<bool>,
}

impl ActiveSet {
    /// `labels` are deduplicated; `negatives` must be disjoint from them.
    pub fn new(labels: &[u32], mut negatives: Vec<u32>) -> Self {
        let mut ids = Vec::with_capacity(labels.len() + negatives.len());
        for &y in labels {
            if !ids.contains(&y) {
                ids.push(y);
            }
        }
        let num_true = ids.len();
        negatives.sort_unstable();
        negatives.dedup();
        debug_assert!(negatives.iter().all(|n| !ids.contains(n)));
        ids.extend(negatives);
        let mut true_mask = vec![false; ids.len()];
        true_mask[..num_true].fill(true);
        Self { ids, true_mask }
    }

    /// Every class, as used by full softmax.
    pub fn full(labels: &[u32], num_classes: usize) -> Self {
        let negatives = (0..num_classes as u32).filter(|c| !labels.contains(c)).collect();
        Self::new(labels, negatives)
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn true_mask(&self) -> &[bool] {
        &self.true_mask
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_true(&self) -> usize {
        self.true_mask.iter().filter(|&&t| t).count()
    }

    pub fn negatives(&self) -> &[u32] {
        &self.ids[self.num_true()..]
    }
}

fn distinct_labels(labels: &[u32], num_classes: usize) -> Vec<u32> {
    let mut out: Vec<u32> = labels.iter().copied().filter(|&c| (c as usize) < num_classes).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Draws `n` distinct classes by rejection from `draw`, skipping `exclude`.
/// When rejections pile up (most mass excluded or already taken) it finishes
/// with exact successive draws over `weight`, which has the same law.
fn draw_distinct<R: Rng + ?Sized>(
    n: usize,
    num_classes: usize,
    exclude: &[u32],
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> u32,
    weight: impl Fn(u32) -> f64,
) -> Vec<u32> {
    let mut chosen = Vec::with_capacity(n);
    let mut seen: HashSet<u32> = HashSet::with_capacity(n * 2);
    let budget = 16 * n + 64;
    let mut misses = 0;
    while chosen.len() < n && misses < budget {
        let c = draw(rng);
        if exclude.contains(&c) || !seen.insert(c) {
            misses += 1;
            continue;
        }
        chosen.push(c);
    }
    if chosen.len() < n {
        let mut pool: Vec<(u32, f64)> = (0..num_classes as u32)
            .filter(|c| !exclude.contains(c) && !seen.contains(c))
            .map(|c| (c, weight(c)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        while chosen.len() < n && !pool.is_empty() {
            let total: f64 = pool.iter().map(|p| p.1).sum();
            let mut u = rng.random::<f64>() * total;
            let mut pick = pool.len() - 1;
            for (i, &(_, w)) in pool.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            chosen.push(pool.swap_remove(pick).0);
        }
    }
    chosen
}

/// Trims or pads raw candidates to exactly `n_target` negatives.
///
/// Candidates that are true labels are dropped. A surplus is cut down to a
/// uniform random subset; a shortfall is filled with uniformly drawn classes
/// that are neither true labels nor already chosen.
pub fn finalize_active_set<R: Rng + ?Sized>(
    candidates: &CandidateSet,
    labels: &[u32],
    n_target: usize,
    num_classes: usize,
    rng: &mut R,
) -> Result<ActiveSet, SamplerError> {
    let y = distinct_labels(labels, num_classes);
    let available = num_classes - y.len();
    if n_target > available {
        return Err(SamplerError::TooManyNegatives {
            requested: n_target,
            available,
        });
    }
    let mut negatives: Vec<u32> = candidates
        .ids()
        .iter()
        .copied()
        .filter(|&c| (c as usize) < num_classes && y.binary_search(&c).is_err())
        .collect();
    if negatives.len() > n_target {
        let keep = rand::seq::index::sample(rng, negatives.len(), n_target);
        negatives = keep.into_iter().map(|i| negatives[i]).collect();
    } else if negatives.len() < n_target {
        let mut exclude = y.clone();
        exclude.extend_from_slice(&negatives);
        let pad = draw_distinct(
            n_target - negatives.len(),
            num_classes,
            &exclude,
            rng,
            |r| r.random_range(0..num_classes as u32),
            |_| 1.0,
        );
        negatives.extend(pad);
    }
    Ok(ActiveSet::new(labels, negatives))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SamplerStats {
    /// Inputs whose retrieval (minus true labels) came back empty.
    pub empty_retrievals: u64,
    /// Queries skipped because the query vector was all zero.
    pub degenerate_queries: u64,
    /// Negatives added by uniform padding.
    pub padded: u64,
    /// Retrieved negatives before trimming or padding.
    pub retrieved: u64,
    pub inputs: u64,
}

/// A configured sampler: kind, budget and whatever state the kind needs.
#[derive(Debug)]
pub struct NegativeSampler {
    kind: SamplerKind,
    negatives: usize,
    top_k: usize,
    num_classes: usize,
    freq: Option<FrequencyTable>,
    ranking: Vec<u32>,
    rank_of: Vec<u32>,
    empty_retrievals: AtomicU64,
    degenerate_queries: AtomicU64,
    padded: AtomicU64,
    retrieved: AtomicU64,
    inputs: AtomicU64,
}

impl NegativeSampler {
    /// `freq` drives the frequency sampler and the rank order of the
    /// log-uniform sampler (identity order when absent).
    pub fn new(
        kind: SamplerKind,
        negatives: usize,
        top_k: usize,
        num_classes: usize,
        freq: Option<FrequencyTable>,
    ) -> Result<Self, SamplerError> {
        if kind == SamplerKind::TopK && (top_k == 0 || top_k > num_classes) {
            return Err(SamplerError::InvalidK { k: top_k, num_classes });
        }
        if kind == SamplerKind::Frequency && freq.as_ref().is_none_or(|f| f.total() == 0) {
            return Err(SamplerError::NoMass);
        }
        let ranking = match &freq {
            Some(f) if f.num_classes() == num_classes => f.ranking(),
            _ => (0..num_classes as u32).collect(),
        };
        let mut rank_of = vec![0u32; num_classes];
        for (r, &c) in ranking.iter().enumerate() {
            rank_of[c as usize] = r as u32;
        }
        Ok(Self {
            kind,
            negatives,
            top_k,
            num_classes,
            freq,
            ranking,
            rank_of,
            empty_retrievals: AtomicU64::new(0),
            degenerate_queries: AtomicU64::new(0),
            padded: AtomicU64::new(0),
            retrieved: AtomicU64::new(0),
            inputs: AtomicU64::new(0),
        })
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn stats(&self) -> SamplerStats {
        SamplerStats {
            empty_retrievals: self.empty_retrievals.load(Ordering::Relaxed),
            degenerate_queries: self.degenerate_queries.load(Ordering::Relaxed),
            padded: self.padded.load(Ordering::Relaxed),
            retrieved: self.retrieved.load(Ordering::Relaxed),
            inputs: self.inputs.load(Ordering::Relaxed),
        }
    }

    /// Negative budget for one input: the configured count, capped by the
    /// number of non-true classes.
    pub fn budget(&self, labels: &[u32]) -> usize {
        let y = distinct_labels(labels, self.num_classes).len();
        self.negatives.min(self.num_classes - y)
    }

    /// Probability that one draw of this sampler proposes `class`; `None`
    /// for kinds without a closed-form proposal.
    pub fn proposal_prob(&self, class: u32) -> Option<f64> {
        match self.kind {
            SamplerKind::Uniform => Some(1.0 / self.num_classes as f64),
            SamplerKind::LogUniform => {
                let rank = *self.rank_of.get(class as usize)? as f64;
                Some(((rank + 2.0) / (rank + 1.0)).ln() / (self.num_classes as f64 + 1.0).ln())
            }
            SamplerKind::Frequency => self.freq.as_ref().map(|f| f.prob(class)),
            _ => None,
        }
    }

    /// Active set for one input.
    ///
    /// `embedding` is the penultimate activation (LNS-Embedding),
    /// `class_vectors` the output weight rows (LNS-Label), `logits` the full
    /// output layer (top-k only).
    #[allow(clippy::too_many_arguments)]
    pub fn active_set<T: Scalar, R: Rng + ?Sized>(
        &self,
        labels: &[u32],
        embedding: &[T],
        class_vectors: &Matrix<T>,
        tables: Option<&LshTables<T>>,
        logits: Option<&[T]>,
        rng: &mut R,
    ) -> Result<ActiveSet, SamplerError> {
        if labels.is_empty() {
            return Err(SamplerError::EmptyLabels);
        }
        self.inputs.fetch_add(1, Ordering::Relaxed);
        let n = self.budget(labels);
        let candidates = match self.kind {
            SamplerKind::Full => return Ok(ActiveSet::full(labels, self.num_classes)),
            SamplerKind::TopK => {
                let logits = logits.ok_or(SamplerError::MissingInput(self.kind, "full logits"))?;
                return top_k_candidates(logits, self.top_k, labels);
            }
            SamplerKind::Uniform => sample_uniform(n, self.num_classes, labels, rng)?,
            SamplerKind::LogUniform => {
                sample_log_uniform(n, self.num_classes, labels, &self.ranking, rng)?
            }
            SamplerKind::Frequency => {
                let freq = self.freq.as_ref().ok_or(SamplerError::NoMass)?;
                sample_frequency(n, freq, labels, rng)?
            }
            SamplerKind::LnsLabel | SamplerKind::LnsEmbedding => {
                let tables = tables.ok_or(SamplerError::MissingInput(self.kind, "hash tables"))?;
                let query = if self.kind == SamplerKind::LnsLabel {
                    let pick = labels[rng.random_range(0..labels.len())];
                    class_vectors.row(pick as usize)
                } else {
                    embedding
                };
                let (got, degenerate) = lns::query_excluding(tables, query, labels)?;
                if degenerate {
                    self.degenerate_queries.fetch_add(1, Ordering::Relaxed);
                }
                if got.is_empty() {
                    self.empty_retrievals.fetch_add(1, Ordering::Relaxed);
                }
                self.retrieved.fetch_add(got.len() as u64, Ordering::Relaxed);
                self.padded
                    .fetch_add(n.saturating_sub(got.len()) as u64, Ordering::Relaxed);
                got
            }
        };
        finalize_active_set(&candidates, labels, n, self.num_classes, rng)
    }
}

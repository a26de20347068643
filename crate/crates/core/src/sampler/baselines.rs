//! Static-distribution samplers and top-k selection.

use std::cmp::Ordering;

use rand::Rng;

use super::{distinct_labels, draw_distinct, ActiveSet, FrequencyTable, SamplerError};
use crate::scalar::Scalar;
use crate::tables::CandidateSet;

fn check_budget(n: usize, num_classes: usize, exclude: &[u32]) -> Result<(), SamplerError> {
    let available = num_classes - distinct_labels(exclude, num_classes).len();
    if n > available {
        return Err(SamplerError::TooManyNegatives {
            requested: n,
            available,
        });
    }
    Ok(())
}

/// `n` distinct classes uniformly from those not in `exclude`.
pub fn sample_uniform<R: Rng + ?Sized>(
    n: usize,
    num_classes: usize,
    exclude: &[u32],
    rng: &mut R,
) -> Result<CandidateSet, SamplerError> {
    check_budget(n, num_classes, exclude)?;
    let ids = draw_distinct(
        n,
        num_classes,
        exclude,
        rng,
        |r| r.random_range(0..num_classes as u32),
        |_| 1.0,
    );
    Ok(CandidateSet::from_ids(ids))
}

/// `n` distinct classes where zero-based frequency rank `r` has mass
/// proportional to `ln((r + 2) / (r + 1))`.
///
/// `ranking[r]` is the class at rank `r`. Ranks are drawn by inverting the
/// CDF, `r = floor(exp(u * ln(N + 1))) - 1`.
pub fn sample_log_uniform<R: Rng + ?Sized>(
    n: usize,
    num_classes: usize,
    exclude: &[u32],
    ranking: &[u32],
    rng: &mut R,
) -> Result<CandidateSet, SamplerError> {
    assert_eq!(ranking.len(), num_classes, "ranking must cover every class");
    check_budget(n, num_classes, exclude)?;
    let log_range = (num_classes as f64 + 1.0).ln();
    let mut rank_of = vec![0usize; num_classes];
    for (r, &c) in ranking.iter().enumerate() {
        rank_of[c as usize] = r;
    }
    let ids = draw_distinct(
        n,
        num_classes,
        exclude,
        rng,
        |r| {
            let u: f64 = r.random();
            let rank = ((u * log_range).exp() as usize).saturating_sub(1);
            ranking[rank.min(num_classes - 1)]
        },
        |c| {
            let r = rank_of[c as usize] as f64;
            ((r + 2.0) / (r + 1.0)).ln()
        },
    );
    Ok(CandidateSet::from_ids(ids))
}

/// `n` distinct classes drawn in proportion to their training counts.
pub fn sample_frequency<R: Rng + ?Sized>(
    n: usize,
    freq: &FrequencyTable,
    exclude: &[u32],
    rng: &mut R,
) -> Result<CandidateSet, SamplerError> {
    let num_classes = freq.num_classes();
    let eligible = (0..num_classes as u32)
        .filter(|c| freq.count(*c) > 0 && !exclude.contains(c))
        .count();
    if eligible == 0 {
        return Err(SamplerError::NoMass);
    }
    if n > eligible {
        return Err(SamplerError::TooManyNegatives {
            requested: n,
            available: eligible,
        });
    }
    let ids = draw_distinct(
        n,
        num_classes,
        exclude,
        rng,
        |r| freq.sample(r).expect("table has mass"),
        |c| freq.count(c) as f64,
    );
    Ok(CandidateSet::from_ids(ids))
}

/// True labels plus the `k` highest logits, ties to the lower class id.
pub fn top_k_candidates<T: Scalar>(
    logits: &[T],
    k: usize,
    labels: &[u32],
) -> Result<ActiveSet, SamplerError> {
    let num_classes = logits.len();
    if k == 0 || k > num_classes {
        return Err(SamplerError::InvalidK { k, num_classes });
    }
    let mut order: Vec<u32> = (0..num_classes as u32).collect();
    let by_score = |a: &u32, b: &u32| -> Ordering {
        logits[*b as usize]
            .partial_cmp(&logits[*a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k < num_classes {
        order.select_nth_unstable_by(k - 1, by_score);
        order.truncate(k);
    }
    let y = distinct_labels(labels, num_classes);
    order.retain(|c| y.binary_search(c).is_err());
    Ok(ActiveSet::new(labels, order))
}

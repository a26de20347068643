use std::cmp::Ordering;

use super::EvalError;
use crate::scalar::Scalar;

/// The `k` highest-scoring ids, best first, ties to the lower id.
pub fn top_k_ids<T: Scalar>(scores: &[T], k: usize) -> Vec<u32> {
    let k = k.min(scores.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &u32, b: &u32| -> Ordering {
        scores[*b as usize]
            .partial_cmp(&scores[*a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    let mut ids: Vec<u32> = (0..scores.len() as u32).collect();
    if k < ids.len() {
        ids.select_nth_unstable_by(k - 1, cmp);
        ids.truncate(k);
    }
    ids.sort_unstable_by(cmp);
    ids
}

/// Fraction of the first `k` ranked ids that are in `truth`.
///
/// `ranked` orders all classes best first. Returns `None` when `truth` is
/// empty; such samples are left out of averages.
pub fn precision_at_k(ranked: &[u32], truth: &[u32], k: usize, num_classes: usize) -> Result<Option<f64>, EvalError> {
    if k == 0 || k > num_classes {
        return Err(EvalError::InvalidK { k, num_classes });
    }
    if truth.is_empty() {
        return Ok(None);
    }
    let hits = ranked.iter().take(k).filter(|id| truth.contains(id)).count();
    Ok(Some(hits as f64 / k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_cases() {
        assert_eq!(precision_at_k(&[3, 1, 2], &[3], 1, 3).unwrap(), Some(1.0));
        assert_eq!(precision_at_k(&[3, 1, 2], &[2], 1, 3).unwrap(), Some(0.0));
        assert_eq!(precision_at_k(&[3, 1, 2], &[], 1, 3).unwrap(), None);
        assert!(precision_at_k(&[3, 1, 2], &[1], 4, 3).is_err());
        assert!(precision_at_k(&[3, 1, 2], &[1], 0, 3).is_err());
    }

    #[test]
    fn hand_scored_fixture() {
        let scores = [0.1f64, 0.9, 0.3, 0.9, 0.0, 0.5, 0.2, 0.8];
        let ranked = top_k_ids(&scores, 8);
        assert_eq!(ranked, vec![1, 3, 7, 5, 2, 6, 0, 4]);
        let cases: [(&[u32], f64, f64); 3] = [(&[3, 5], 0.0, 0.4), (&[1], 1.0, 0.2), (&[4, 0, 6], 0.0, 0.0)];
        for (truth, p1, p5) in cases {
            assert_eq!(precision_at_k(&ranked, truth, 1, 8).unwrap(), Some(p1));
            assert_eq!(precision_at_k(&ranked, truth, 5, 8).unwrap(), Some(p5));
        }
        assert_eq!(top_k_ids(&scores, 3), vec![1, 3, 7]);
    }
}

use super::HashError;
use crate::scalar::{dot, norm, Scalar};

/// SimHash collision probability `1 - theta / pi` for the angle between `x`
/// and `y`.
pub fn simhash_collision_prob<T: Scalar>(x: &[T], y: &[T]) -> Result<f64, HashError> {
    if x.len() != y.len() {
        return Err(HashError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (nx, ny) = (norm(x).as_f64(), norm(y).as_f64());
    if nx == 0.0 || ny == 0.0 {
        return Err(HashError::Degenerate);
    }
    let cos = (dot(x, y).as_f64() / (nx * ny)).clamp(-1.0, 1.0);
    Ok(1.0 - cos.acos() / std::f64::consts::PI)
}

/// Probability that a (K, L) table set retrieves an item whose per-function
/// collision probability with the query is `alpha`: `1 - (1 - alpha^K)^L`.
pub fn retrieval_prob(alpha: f64, k: usize, l: usize) -> Result<f64, HashError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(HashError::InvalidProbability(alpha));
    }
    if k == 0 || l == 0 {
        return Err(HashError::InvalidParam("K and L must be >= 1".into()));
    }
    Ok(1.0 - (1.0 - alpha.powi(k as i32)).powi(l as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collision_prob_special_angles() {
        let x = [1.0f64, 2.0, -0.5];
        assert!((simhash_collision_prob(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(simhash_collision_prob(&x, &neg).unwrap().abs() < 1e-12);
        let (a, b) = ([1.0f64, 0.0], [0.0f64, 3.0]);
        assert!((simhash_collision_prob(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            simhash_collision_prob(&[0.0f64, 0.0], &a),
            Err(HashError::Degenerate)
        );
    }

    #[test]
    fn collision_prob_clamps_drift() {
        // Nearly parallel vectors whose computed cosine can exceed 1.
        let x = [0.1f32, 0.2, 0.3];
        let y = [0.1f32 * 3.0, 0.2 * 3.0, 0.3 * 3.0];
        let p = simhash_collision_prob(&x, &y).unwrap();
        assert!(p.is_finite() && p <= 1.0 && p > 0.999);
    }

    #[test]
    fn retrieval_prob_values() {
        assert!((retrieval_prob(0.5, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(retrieval_prob(1.0, 6, 400).unwrap(), 1.0);
        // 1 - (1 - 0.81)^3 = 1 - 0.006859
        assert!((retrieval_prob(0.9, 2, 3).unwrap() - 0.993141).abs() < 1e-9);
        assert!(retrieval_prob(1.2, 2, 3).is_err());
        assert!(retrieval_prob(-0.1, 2, 3).is_err());
        assert!(retrieval_prob(0.5, 0, 3).is_err());
    }

    proptest! {
        #[test]
        fn retrieval_prob_monotone(a in 0.0f64..1.0, da in 0.0f64..0.5, k in 1usize..10, l in 1usize..60) {
            let b = (a + da).min(1.0);
            let p = retrieval_prob(a, k, l).unwrap();
            prop_assert!(retrieval_prob(b, k, l).unwrap() >= p);
            prop_assert!(retrieval_prob(a, k, l + 1).unwrap() >= p);
            prop_assert!(retrieval_prob(a, k + 1, l).unwrap() <= p);
        }
    }
}

use crate::metrics::clamp_probability;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Two-class softmax, written as a pair of sigmoids.
#[inline]
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    [sigmoid(z[0] - z[1]), sigmoid(z[1] - z[0])]
}

/// Logistic function, stable for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln p[y]` with the probability clamped away from zero.
pub fn cross_entropy(p: &[f64], y: usize) -> f64 {
    -clamp_probability(p[y]).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[LN_2, 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0), 0.0);
        assert!((cross_entropy(&[0.5, 0.5], 0) - LN_2).abs() < 1e-15);
        assert!((cross_entropy(&[0.5, 0.5], 1) - LN_2).abs() < 1e-15);
        assert!((cross_entropy(&[0.25, 0.75], 1) - 0.2877).abs() < 1e-4);
        assert!((cross_entropy(&[0.25, 0.75], 1) + 0.75f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[1.0, 0.0], 1).is_finite());
    }

    #[test]
    fn sigmoid_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            z in prop::collection::vec(-50.0f64..50.0, 1..6),
            c in -100.0f64..100.0,
        ) {
            let p = softmax(&z);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn softmax2_matches_general(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let p = softmax2([a, b]);
            let q = softmax(&[a, b]);
            prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }
    }
}

use crate::nn::{log_sigmoid, sigmoid, Real};

/// `-log σ(t·s) + λ·s²` and its derivative in `s`.
pub fn pairwise_loss<S: Real>(score: S, target: S, l2: S) -> (S, S) {
    let m = target * score;
    let loss = -log_sigmoid(m) + l2 * score * score;
    let grad = -target * sigmoid(-m) + S::lit(2.0) * l2 * score;
    (loss, grad)
}

/// `-log σ(s_c - s_r)` and its derivatives in `(s_c, s_r)`.
pub fn pointwise_ranking_loss<S: Real>(s_chosen: S, s_rejected: S) -> (S, S, S) {
    let m = s_chosen - s_rejected;
    let g = sigmoid(-m);
    (-log_sigmoid(m), -g, g)
}

/// Ranking term plus `BCE(σ(s_c), 1) + BCE(σ(s_r), 0)`, equally weighted.
pub fn calibrated_loss<S: Real>(s_chosen: S, s_rejected: S) -> (S, S, S) {
    let (rank, gc, gr) = pointwise_ranking_loss(s_chosen, s_rejected);
    let loss = rank - log_sigmoid(s_chosen) - log_sigmoid(-s_rejected);
    (loss, gc - sigmoid(-s_chosen), gr + sigmoid(s_rejected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn zero_score_is_ln2() {
        assert!((pairwise_loss(0.0, 1.0, 1e-4).0 - LN_2).abs() < 1e-12);
        assert!((pointwise_ranking_loss(0.3, 0.3).0 - LN_2).abs() < 1e-12);
        assert!((calibrated_loss(0.0, 0.0).0 - 3.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_score() {
        let (l, _) = pairwise_loss(10.0f64, 1.0, 1e-4);
        let expected = (1.0 + (-10.0f64).exp()).ln() + 1e-4 * 100.0;
        assert!((l - expected).abs() < 1e-12);
        assert!((l - 0.010045).abs() < 1e-6);
        let (r, _, _) = pointwise_ranking_loss(10.0f64, 0.0);
        assert!((r - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn target_symmetry() {
        for s in [-3.0f64, -0.2, 0.0, 0.7, 12.0] {
            assert_eq!(pairwise_loss(s, 1.0, 1e-4).0, pairwise_loss(-s, -1.0, 1e-4).0);
        }
    }

    #[test]
    fn ranking_margin_convexity() {
        for (a, b) in [(0.0f64, 0.0), (1.0, -2.0), (5.0, 4.0)] {
            let sum = pointwise_ranking_loss(a, b).0 + pointwise_ranking_loss(b, a).0;
            if a == b {
                assert!((sum - 2.0 * LN_2).abs() < 1e-12);
            } else {
                assert!(sum > 2.0 * LN_2);
            }
        }
    }

    #[test]
    fn calibrated_closed_form() {
        let sp = |x: f64| (1.0 + (-x).exp()).ln();
        let want = sp(2.0) + sp(1.0) + sp(1.0);
        assert!((calibrated_loss(1.0f64, -1.0).0 - want).abs() < 1e-12);
        assert!(calibrated_loss(40.0f64, -40.0).0 < 1e-15);
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for s in [-4.0f64, -0.5, 0.0, 0.9, 6.0] {
            for t in [1.0, -1.0] {
                let (_, g) = pairwise_loss(s, t, 1e-2);
                let n = (pairwise_loss(s + h, t, 1e-2).0 - pairwise_loss(s - h, t, 1e-2).0) / (2.0 * h);
                assert!((g - n).abs() < 1e-7);
            }
            for r in [-1.0, 0.3] {
                for f in [pointwise_ranking_loss::<f64>, calibrated_loss::<f64>] {
                    let (_, gc, gr) = f(s, r);
                    let nc = (f(s + h, r).0 - f(s - h, r).0) / (2.0 * h);
                    let nr = (f(s, r + h).0 - f(s, r - h).0) / (2.0 * h);
                    assert!((gc - nc).abs() < 1e-7 && (gr - nr).abs() < 1e-7);
                }
            }
        }
    }
}

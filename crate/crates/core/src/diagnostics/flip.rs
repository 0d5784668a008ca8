use serde::{Deserialize, Serialize};

use crate::evaluators::Evaluator;
use crate::features::{LoopStateRecord, PairSource, PreferencePair};
use crate::par::par_map;
use crate::{Error, Result};

/// Normal-score std below this fraction of `|mean| + 1e-6` marks a constant
/// function.
pub const CONSTANT_OUTPUT_REL_STD: f64 = 1e-3;

/// A sign-flip rate at or below this marks a scorer that ignores argument
/// order.
pub const ORDER_INSENSITIVE_MAX_FLIP_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CorrelationKind {
    #[default]
    Pearson,
    /// Pearson on average ranks.
    Spearman,
}

/// Order-sensitivity summary of a pairwise scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipReport {
    pub n: usize,
    /// Fraction of all pairs whose normal and flipped scores are nonzero and
    /// of opposite sign.
    pub sign_flip_rate: f64,
    /// Pairs with a zero normal or flipped score.
    pub ties: usize,
    /// `None` when either score vector has zero variance.
    pub antisym_correlation: Option<f64>,
    pub correlation_kind: CorrelationKind,
    pub mean_sum: f64,
    pub normal_range: (f64, f64),
    pub flipped_range: (f64, f64),
    pub normal_mean: f64,
    pub normal_std: f64,
    pub constant_output: bool,
    pub order_insensitive: bool,
    pub degenerate: bool,
    pub degeneracy_reason: String,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn range(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            out[*k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Builds the report from precomputed `f(chosen, rejected)` and
/// `f(rejected, chosen)` scores.
pub fn flip_report(normal: &[f64], flipped: &[f64], kind: CorrelationKind) -> Result<FlipReport> {
    if normal.len() != flipped.len() {
        return Err(Error::shape("flipped scores", normal.len(), flipped.len()));
    }
    if normal.is_empty() {
        return Err(Error::Empty("flip test input".into()));
    }
    if let Some(v) = normal.iter().chain(flipped).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("flip test score {v}")));
    }
    let n = normal.len();
    let ties = normal.iter().zip(flipped).filter(|(a, b)| **a == 0.0 || **b == 0.0).count();
    let flips =
        normal.iter().zip(flipped).filter(|(a, b)| **a != 0.0 && **b != 0.0 && a.signum() != b.signum()).count();
    let sign_flip_rate = flips as f64 / n as f64;
    let antisym_correlation = match kind {
        CorrelationKind::Pearson => pearson(normal, flipped),
        CorrelationKind::Spearman => spearman(normal, flipped),
    };
    let mean_sum = normal.iter().zip(flipped).map(|(a, b)| a + b).sum::<f64>() / n as f64;
    let normal_mean = mean(normal);
    let normal_std = (normal.iter().map(|v| (v - normal_mean).powi(2)).sum::<f64>() / n as f64).sqrt();

    let constant_output = normal_std < CONSTANT_OUTPUT_REL_STD * (normal_mean.abs() + 1e-6);
    let order_insensitive = sign_flip_rate <= ORDER_INSENSITIVE_MAX_FLIP_RATE;
    let mut reasons = Vec::new();
    if constant_output {
        reasons.push(format!("constant output (score std {normal_std:.3e}, mean {normal_mean:+.4})"));
    }
    if order_insensitive {
        reasons.push(format!(
            "order-insensitive (sign flips on {:.1}% of pairs, mean sum {mean_sum:+.3})",
            100.0 * sign_flip_rate
        ));
    }
    Ok(FlipReport {
        n,
        sign_flip_rate,
        ties,
        antisym_correlation,
        correlation_kind: kind,
        mean_sum,
        normal_range: range(normal),
        flipped_range: range(flipped),
        normal_mean,
        normal_std,
        constant_output,
        order_insensitive,
        degenerate: constant_output || order_insensitive,
        degeneracy_reason: reasons.join("; "),
    })
}

/// Scores every pair in both argument orders with `scorer`.
pub fn flip_test<F>(pairs: &[PreferencePair], scorer: F, kind: CorrelationKind) -> Result<FlipReport>
where
    F: Fn(&LoopStateRecord, &LoopStateRecord) -> Result<f64> + Sync,
{
    let scored = par_map(pairs, |p| Ok((scorer(&p.chosen, &p.rejected)?, scorer(&p.rejected, &p.chosen)?)))?;
    let (normal, flipped): (Vec<f64>, Vec<f64>) = scored.into_iter().unzip();
    flip_report(&normal, &flipped, kind)
}

/// Flip test of a pairwise evaluator over every pair of `source`.
pub fn flip_test_model(model: &Evaluator<f32>, source: &dyn PairSource, kind: CorrelationKind) -> Result<FlipReport> {
    if !model.is_pairwise() {
        return Err(Error::Config("the flip test needs a pairwise evaluator".into()));
    }
    let pairs = source.load_all()?;
    flip_test(&pairs, |a, b| model.preference_score(a, b), kind)
}

/// Coarse label for the scorer's offset as seen in the mean sum.
pub fn bias_label(mean_sum: f64) -> &'static str {
    if mean_sum < -0.3 {
        "Negative"
    } else if mean_sum <= 0.3 {
        "Near zero"
    } else if mean_sum < 2.0 {
        "Moderate"
    } else {
        "High"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antisymmetric_scores() {
        let normal = [0.3, -1.2, 2.5, 0.7];
        let flipped: Vec<f64> = normal.iter().map(|v| -v).collect();
        let r = flip_report(&normal, &flipped, CorrelationKind::Pearson).unwrap();
        assert_eq!(r.sign_flip_rate, 1.0);
        assert!((r.antisym_correlation.unwrap() + 1.0).abs() < 1e-12);
        assert!(r.mean_sum.abs() < 1e-12);
        assert!(!r.degenerate);
        assert!(r.degeneracy_reason.is_empty());
    }

    #[test]
    fn constant_scores_are_flagged() {
        let r = flip_report(&[13.0; 5], &[13.0; 5], CorrelationKind::Pearson).unwrap();
        assert!(r.constant_output && r.order_insensitive && r.degenerate);
        assert_eq!(r.antisym_correlation, None);
        assert_eq!(r.mean_sum, 26.0);
    }

    #[test]
    fn ties_are_counted_not_flipped() {
        let r = flip_report(&[0.0, 1.0, 2.0], &[0.0, -1.0, 3.0], CorrelationKind::Pearson).unwrap();
        assert_eq!(r.ties, 1);
        assert!((r.sign_flip_rate - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(flip_report(&[], &[], CorrelationKind::Pearson), Err(Error::Empty(_))));
        assert!(flip_report(&[1.0], &[1.0, 2.0], CorrelationKind::Pearson).is_err());
        assert!(flip_report(&[f64::NAN], &[1.0], CorrelationKind::Pearson).is_err());
    }

    #[test]
    fn spearman_uses_ranks() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 8.0, 27.0, 1000.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(pearson(&x, &y).unwrap() < 0.99);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn bias_labels() {
        let labels: Vec<_> = [1.04, 2.51, 1.64, -0.22, -0.37].into_iter().map(bias_label).collect();
        assert_eq!(labels, ["Moderate", "High", "Moderate", "Near zero", "Negative"]);
    }
}

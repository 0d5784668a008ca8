use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::spec::SynthSpec;
use crate::rng::{stream, Stream};

pub const DEFAULT_ORACLE_SAMPLES: usize = 200_000;

/// What a classifier gets to see.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Access {
    /// Both responses of the pair.
    Pairwise,
    /// One response at a time.
    Independent,
}

fn flip(acc: f64, rate: f64) -> f64 {
    (1.0 - rate) * acc + rate * (1.0 - acc)
}

fn score(correct: f64, decision: f64) -> f64 {
    if decision > 0.0 {
        correct
    } else if decision < 0.0 {
        1.0 - correct
    } else {
        0.5
    }
}

/// Monte-Carlo accuracy of the Bayes-optimal classifier under `access`,
/// measured against the (possibly noisy) stored labels.
///
/// Given the direction `u`, everything a classifier can learn about the label
/// from one record is the ramp-weighted sum of the span tokens projected on
/// `u`: `A = K·W·(β ± δ) + N(0, σ_n²·K·W)` with `K` span tokens, `W = Σ w_t²`
/// and `β = b·u` the shared offset. Pairwise access decides on `sign(A − B)`,
/// independent access on `sign(A)`.
pub fn oracle_accuracy(spec: &SynthSpec, access: Access, samples: usize) -> f64 {
    let mut rng = stream(spec.seed, Stream::Oracle);
    let delta = spec.effective_delta();
    let sb = spec.effective_sigma_base();
    let sn = spec.sigma_noise;
    let w: f64 = spec.step_weights().iter().map(|v| v * v).sum();
    let samples = samples.max(1);
    let mut hits = 0.0;
    for _ in 0..samples {
        let tokens = rng.random_range(spec.min_tokens()..=spec.seq_len);
        let kw = spec.response_span.min(tokens) as f64 * w;
        let noise_sd = sn * kw.sqrt();
        let beta = sb * rng.sample::<f64, _>(StandardNormal);
        let zc: f64 = rng.sample(StandardNormal);
        let zr: f64 = rng.sample(StandardNormal);
        let a = kw * (beta + delta) + noise_sd * zc;
        let b = kw * (beta - delta) + noise_sd * zr;
        let clean = match access {
            Access::Pairwise => score(1.0, a - b),
            Access::Independent => {
                if rng.random::<bool>() {
                    score(1.0, a)
                } else {
                    score(1.0, -b)
                }
            }
        };
        hits += flip(clean, spec.label_noise_rate);
    }
    hits / samples as f64
}

/// Closed-form counterpart of [`oracle_accuracy`], averaged exactly over the
/// uniform token-count distribution.
pub fn closed_form_accuracy(spec: &SynthSpec, access: Access) -> f64 {
    let phi = Normal::standard();
    let delta = spec.effective_delta();
    let sb = spec.effective_sigma_base();
    let sn = spec.sigma_noise;
    let w: f64 = spec.step_weights().iter().map(|v| v * v).sum();
    let lo = spec.min_tokens();
    let mut total = 0.0;
    for tokens in lo..=spec.seq_len {
        let kw = spec.response_span.min(tokens) as f64 * w;
        let z = match access {
            Access::Pairwise => {
                if sn == 0.0 {
                    f64::INFINITY * delta.signum()
                } else {
                    delta * (2.0 * kw).sqrt() / sn
                }
            }
            Access::Independent => {
                let sd = (sb * sb + sn * sn / kw).sqrt();
                if sd == 0.0 {
                    f64::INFINITY * delta.signum()
                } else {
                    delta / sd
                }
            }
        };
        let acc = if z.is_nan() || delta == 0.0 { 0.5 } else { phi.cdf(z) };
        total += flip(acc, spec.label_noise_rate);
    }
    total / (spec.seq_len - lo + 1) as f64
}

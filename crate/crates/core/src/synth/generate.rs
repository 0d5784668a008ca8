use std::fs;
use std::path::Path;

use half::f16;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::oracle::{oracle_accuracy, Access, DEFAULT_ORACLE_SAMPLES};
use super::spec::SynthSpec;
use crate::features::{write_dataset, DatasetManifest, LabelSource, LoopStateRecord, PreferencePair, Provenance, Role};
use crate::rng::{stream, stream_id, Stream};
use crate::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Per-pair streams start here so they never collide with named streams.
const PAIR_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub prompt_id: String,
    /// True when label noise swapped the roles: the stored "chosen" record
    /// carries the negative signal.
    pub label_flipped: bool,
    pub token_count: usize,
}

/// Hidden generating state, written next to the chunks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub spec_hash: String,
    /// Unit signal direction.
    pub direction: Vec<f64>,
    pub pairs: Vec<PairTruth>,
    pub oracle_pairwise: f64,
    pub oracle_independent: f64,
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub pairs: Vec<PreferencePair>,
    pub truth: GroundTruth,
}

pub fn direction(spec: &SynthSpec) -> Vec<f64> {
    let mut rng = stream(spec.seed, Stream::Direction);
    loop {
        let u: Vec<f64> = (0..spec.d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return u.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn record(
    spec: &SynthSpec,
    id: &str,
    role: Role,
    tokens: usize,
    offset: &[f64],
    signal: &[f64],
    sign: f64,
    rng: &mut impl Rng,
) -> Result<LoopStateRecord> {
    let (l, d) = (spec.seq_len, spec.d);
    let first = l - tokens;
    let span_start = l - spec.response_span.min(tokens);
    let noise = Normal::new(0.0, spec.sigma_noise).map_err(|e| Error::Config(e.to_string()))?;
    let weights = spec.step_weights();
    let mut states = vec![f16::ZERO; spec.steps * l * d];
    for (t, w) in weights.iter().enumerate() {
        for pos in first..l {
            let row = &mut states[(t * l + pos) * d..(t * l + pos + 1) * d];
            let planted = pos >= span_start;
            for k in 0..d {
                let mut v = noise.sample(rng);
                if planted {
                    v += w * (offset[k] + sign * signal[k]);
                }
                row[k] = f16::from_f64(v);
            }
        }
    }
    LoopStateRecord::new(id, role, spec.steps, d, states, vec_mask(l, tokens))
}

fn vec_mask(len: usize, tokens: usize) -> Vec<u8> {
    let mut m = vec![0u8; len];
    m[len - tokens..].fill(1);
    m
}

/// Generates pairs with global indices `start..start + count`. Every pair has
/// its own RNG stream, so ranges compose: the held-out split of a dataset is
/// just a later range with the same direction.
pub fn generate_range(spec: &SynthSpec, start: usize, count: usize) -> Result<(Vec<PreferencePair>, Vec<PairTruth>)> {
    spec.validate()?;
    let u = direction(spec);
    let delta = spec.effective_delta();
    let signal: Vec<f64> = u.iter().map(|v| v * delta).collect();
    let base = Normal::new(0.0, spec.effective_sigma_base()).map_err(|e| Error::Config(e.to_string()))?;
    let mut pairs = Vec::with_capacity(count);
    let mut truths = Vec::with_capacity(count);
    for i in start..start + count {
        let mut rng = stream_id(spec.seed, PAIR_STREAM_BASE + i as u64);
        let id = format!("syn-{}-{i:06}", spec.seed);
        let tokens = rng.random_range(spec.min_tokens()..=spec.seq_len);
        let offset: Vec<f64> = (0..spec.d).map(|_| base.sample(&mut rng)).collect();
        let flipped = rng.random::<f64>() < spec.label_noise_rate;
        let (chosen_sign, rejected_sign) = if flipped { (-1.0, 1.0) } else { (1.0, -1.0) };
        let chosen = record(spec, &id, Role::Chosen, tokens, &offset, &signal, chosen_sign, &mut rng)?;
        let rejected = record(spec, &id, Role::Rejected, tokens, &offset, &signal, rejected_sign, &mut rng)?;
        pairs.push(PreferencePair::new(id.clone(), chosen, rejected, LabelSource::Synthetic)?);
        truths.push(PairTruth { prompt_id: id, label_flipped: flipped, token_count: tokens });
    }
    Ok((pairs, truths))
}

/// Generates the `spec.n_pairs` training pairs plus their ground truth.
pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    let (pairs, truth_pairs) = generate_range(spec, 0, spec.n_pairs)?;
    let truth = GroundTruth {
        spec: spec.clone(),
        spec_hash: spec.hash(),
        direction: direction(spec),
        pairs: truth_pairs,
        oracle_pairwise: oracle_accuracy(spec, Access::Pairwise, DEFAULT_ORACLE_SAMPLES),
        oracle_independent: oracle_accuracy(spec, Access::Independent, DEFAULT_ORACLE_SAMPLES),
    };
    Ok(SynthDataset { pairs, truth })
}

pub fn provenance(spec: &SynthSpec) -> Provenance {
    Provenance::Synthetic { spec_hash: spec.hash(), spec: serde_json::to_value(spec).expect("spec serializes") }
}

/// Writes chunks, manifest and the ground-truth sidecar into `dir`.
pub fn write_synth(dir: &Path, split: &str, data: &SynthDataset, chunk_size: usize) -> Result<DatasetManifest> {
    let spec = &data.truth.spec;
    let manifest = write_dataset(
        dir,
        split,
        (spec.steps, spec.d, spec.seq_len),
        &data.pairs,
        chunk_size,
        provenance(spec),
        Vec::new(),
    )?;
    let path = dir.join(GROUND_TRUTH_FILE);
    fs::write(&path, serde_json::to_string_pretty(&data.truth)? + "\n").map_err(|e| Error::at(&path, e.into()))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{mean_pool, validate_mask};
    use crate::synth::SignalMode;

    fn small(mode: SignalMode) -> SynthSpec {
        SynthSpec { n_pairs: 40, d: 8, seq_len: 12, steps: 2, response_span: 4, mode, ..Default::default() }
    }

    #[test]
    fn deterministic_and_range_composable() {
        let spec = small(SignalMode::Relational);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert!(a.pairs.iter().zip(&b.pairs).all(|(x, y)| x.bits_eq(y)));
        let (tail, _) = generate_range(&spec, 30, 10).unwrap();
        assert!(tail.iter().zip(&a.pairs[30..]).all(|(x, y)| x.bits_eq(y)));
    }

    #[test]
    fn masks_are_left_padded_and_varied() {
        let data = generate(&small(SignalMode::Relational)).unwrap();
        let mut counts = std::collections::BTreeSet::new();
        for p in &data.pairs {
            let n = validate_mask(p.chosen.mask()).unwrap();
            assert_eq!(n, validate_mask(p.rejected.mask()).unwrap());
            assert!((6..=12).contains(&n));
            counts.insert(n);
        }
        assert!(counts.len() >= 3);
    }

    #[test]
    fn noiseless_span_difference_is_twice_signal() {
        let spec = SynthSpec { sigma_noise: 0.0, sigma_base: 1.0, ..small(SignalMode::Relational) };
        let data = generate(&spec).unwrap();
        let u = &data.truth.direction;
        for p in &data.pairs {
            let (c, r) = (p.chosen.step(1), p.rejected.step(1));
            let start = (spec.seq_len - spec.response_span) * spec.d;
            for (k, (x, y)) in c[start..].iter().zip(&r[start..]).enumerate() {
                let diff = x.to_f64() - y.to_f64();
                let expected = 2.0 * spec.delta * u[k % spec.d];
                assert!((diff - expected).abs() < 2e-2, "{diff} vs {expected}");
            }
        }
    }

    #[test]
    fn role_norms_match_when_offset_dominates() {
        let spec = SynthSpec { n_pairs: 400, sigma_base: 5.0, delta: 0.5, ..small(SignalMode::Relational) };
        let data = generate(&spec).unwrap();
        let norm = |r: &LoopStateRecord| -> f64 {
            let pooled = mean_pool(r).unwrap();
            pooled[1].iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt()
        };
        let mc: f64 = data.pairs.iter().map(|p| norm(&p.chosen)).sum::<f64>() / 400.0;
        let mr: f64 = data.pairs.iter().map(|p| norm(&p.rejected)).sum::<f64>() / 400.0;
        assert!((mc - mr).abs() < 0.01 * mc.max(mr), "{mc} vs {mr}");
    }

    #[test]
    fn label_noise_rate_is_respected() {
        let spec = SynthSpec {
            n_pairs: 2000,
            d: 2,
            seq_len: 2,
            steps: 1,
            response_span: 1,
            label_noise_rate: 0.3,
            ..Default::default()
        };
        let data = generate(&spec).unwrap();
        let rate = data.truth.pairs.iter().filter(|t| t.label_flipped).count() as f64 / 2000.0;
        assert!((rate - 0.3).abs() < 0.035, "{rate}");
    }

    #[test]
    fn direction_is_unit() {
        let u = direction(&SynthSpec::default());
        let n: f64 = u.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

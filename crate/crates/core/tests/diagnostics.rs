mod common;

use looplab::diagnostics::*;
use looplab::features::{InMemorySource, LabelSource, PreferencePair};
use looplab::rng::stream_id;
use looplab::synth::{generate, oracle_accuracy, Access, SignalMode, SynthSpec, DEFAULT_ORACLE_SAMPLES};
use proptest::prelude::*;
use rand::Rng;

fn report(normal: &[f64], flipped: &[f64]) -> FlipReport {
    flip_report(normal, flipped, CorrelationKind::Pearson).unwrap()
}

#[test]
fn constant_thirteen_scorer_is_degenerate() {
    let n = 100;
    let normal: Vec<f64> = (0..n).map(|i| 13.16 + 0.37 * i as f64 / (n - 1) as f64).collect();
    let flipped: Vec<f64> = (0..n).map(|i| 13.05 + 0.40 * ((i * 37) % n) as f64 / (n - 1) as f64).collect();
    let r = report(&normal, &flipped);
    assert_eq!(r.sign_flip_rate, 0.0);
    assert!((r.mean_sum - 26.1).abs() < 0.6, "{}", r.mean_sum);
    assert!(r.degenerate && r.order_insensitive);
    assert_eq!(r.normal_range, (13.16, 13.53));
}

#[test]
fn exact_antisymmetry() {
    let s: Vec<f64> = (1..=50).map(|i| if i % 2 == 0 { i as f64 } else { -(i as f64) / 7.0 }).collect();
    let f: Vec<f64> = s.iter().map(|v| -v).collect();
    let r = report(&s, &f);
    assert_eq!(r.sign_flip_rate, 1.0);
    assert!((r.antisym_correlation.unwrap() + 1.0).abs() < 1e-12);
    assert!(r.mean_sum.abs() < 1e-12);
    assert!(!r.degenerate);
}

#[test]
fn bias_of_half_the_paper_mean_sum() {
    let b = 1.255;
    let core: Vec<f64> = (0..1000).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / 1000.0).collect();
    let normal: Vec<f64> = core.iter().map(|s| s + b).collect();
    let flipped: Vec<f64> = core.iter().map(|s| -s + b).collect();
    let r = report(&normal, &flipped);
    assert!((r.mean_sum - 2.51).abs() < 1e-9);
    // |s| <= 1 < b: every pair stays positive both ways
    assert_eq!(r.sign_flip_rate, 0.0);
    let wide: Vec<f64> = core.iter().map(|s| 3.0 * s).collect();
    let r = report(&wide.iter().map(|s| s + b).collect::<Vec<_>>(), &wide.iter().map(|s| -s + b).collect::<Vec<_>>());
    assert!(r.sign_flip_rate > 0.0 && r.sign_flip_rate < 1.0);
    assert_eq!(bias_label(r.mean_sum), "High");
}

#[test]
fn zero_scores_are_ties_not_flips() {
    let r = report(&[0.0, 1.0, -1.0, 2.0], &[1.0, -1.0, 0.0, -2.0]);
    assert_eq!(r.ties, 2);
    assert_eq!(r.sign_flip_rate, 0.5);
}

#[test]
fn constant_function_has_no_correlation() {
    let r = report(&[0.5; 10], &[0.5; 10]);
    assert!(r.antisym_correlation.is_none());
    assert!(r.constant_output && r.degenerate);
}

#[test]
fn spearman_sees_monotone_antisymmetry() {
    let s: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let f: Vec<f64> = s.iter().map(|v| -(v * v * v)).collect();
    let r = flip_report(&s, &f, CorrelationKind::Spearman).unwrap();
    assert!((r.antisym_correlation.unwrap() + 1.0).abs() < 1e-12);
    assert!(report(&s, &f).antisym_correlation.unwrap() > -1.0 + 1e-3);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(flip_report(&[], &[], CorrelationKind::Pearson).is_err());
    assert!(flip_report(&[1.0], &[1.0, 2.0], CorrelationKind::Pearson).is_err());
    assert!(flip_report(&[f64::NAN], &[1.0], CorrelationKind::Pearson).is_err());
}

proptest! {
    #[test]
    fn antisymmetric_scorers(seed in 0u64..10_000, n in 2usize..200) {
        let mut rng = stream_id(seed, 1);
        let s: Vec<f64> = (0..n).map(|_| {
            let v: f64 = rng.random_range(0.01..10.0);
            if rng.random::<bool>() { v } else { -v }
        }).collect();
        let f: Vec<f64> = s.iter().map(|v| -v).collect();
        let r = report(&s, &f);
        prop_assert!(r.mean_sum.abs() < 1e-6);
        prop_assert_eq!(r.sign_flip_rate, 1.0);
        if let Some(c) = r.antisym_correlation {
            prop_assert!((c + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn constants_are_always_degenerate(c in -1e6f64..1e6, n in 1usize..100) {
        let r = report(&vec![c; n], &vec![c; n]);
        prop_assert!(r.degenerate);
    }

    #[test]
    fn bias_shifts_mean_sum_and_suppresses_flips(seed in 0u64..10_000, b1 in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let mut rng = stream_id(seed, 2);
        let core: Vec<f64> = (0..300).map(|_| rng.random_range(-2.0..2.0)).collect();
        let run = |b: f64| {
            let normal: Vec<f64> = core.iter().map(|s| s + b).collect();
            let flipped: Vec<f64> = core.iter().map(|s| -s + b).collect();
            report(&normal, &flipped)
        };
        let (lo, hi) = (run(b1), run(b1 + extra));
        prop_assert!((lo.mean_sum - 2.0 * b1).abs() < 1e-9);
        prop_assert!((hi.mean_sum - 2.0 * (b1 + extra)).abs() < 1e-9);
        prop_assert!(hi.sign_flip_rate <= lo.sign_flip_rate);
        let neg = run(-(b1 + extra));
        prop_assert!((neg.sign_flip_rate - hi.sign_flip_rate).abs() < 1e-12);
    }
}

/// Score vectors with a chosen accuracy, flip rate, mean sum and
/// correlation. `normal = m/2 + u`, `flipped = m/2 - u + e`: the sign
/// pattern is fixed by the band `u` falls in, and zero-mean noise `e` on the
/// outer bands sets the correlation without moving any sign.
fn golden_scores(n: usize, acc: f64, flip: f64, m: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let h = m.abs() / 2.0;
    // (below -h, inside, above +h) band counts
    let (low, above) = if m >= 0.0 {
        let low = ((1.0 - acc) * n as f64).round() as usize;
        (low, (flip * n as f64).round() as usize - low)
    } else {
        let above = (acc * n as f64).round() as usize;
        ((flip * n as f64).round() as usize - above, above)
    };
    let inside = n - low - above;
    let spread = |k: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64).collect()
    };
    let mut u = spread(low, -h - 4.0, -h - 2.0);
    u.extend(spread(inside, -h, h));
    u.extend(spread(above, h + 2.0, h + 4.0));
    let build = |eps: f64| {
        let normal: Vec<f64> = u.iter().map(|v| m / 2.0 + v).collect();
        let flipped: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let outer = i < low || i >= low + inside;
                let e = if outer {
                    if i % 2 == 0 {
                        eps
                    } else {
                        -eps
                    }
                } else {
                    0.0
                };
                m / 2.0 - v + e
            })
            .collect();
        (normal, flipped)
    };
    let corr = |eps: f64| {
        let (a, b) = build(eps);
        pearson(&a, &b).unwrap()
    };
    let (mut lo, mut hi) = (0.0, 1.9);
    assert!(corr(hi) > rho, "noise budget too small for rho {rho}");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if corr(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(0.5 * (lo + hi))
}

#[test]
fn cross_epoch_table_reproduces_golden_rows() {
    let golden = [
        (1, 0.833, -0.92, 0.57, 1.04),
        (2, 0.952, -0.94, 0.25, 2.51),
        (3, 0.895, -0.97, 0.44, 1.64),
        (4, 0.672, -0.96, 0.96, -0.22),
        (5, 0.624, -0.97, 0.96, -0.37),
    ];
    let rows = golden
        .iter()
        .map(|&(epoch, acc, rho, flip, m)| {
            let (normal, flipped) = golden_scores(2000, acc, flip, m, rho);
            CrossEpochRow::from_scores(epoch, None, &normal, &flipped, CorrelationKind::Pearson).unwrap()
        })
        .collect();
    let table = CrossEpochTable { rows };
    let expected = "\
Epoch  Test Acc  Correlation  Sign Flip Rate  Mean Sum       Bias
    1     83.3%        -0.92             57%     +1.04   Moderate
    2     95.2%        -0.94             25%     +2.51       High
    3     89.5%        -0.97             44%     +1.64   Moderate
    4     67.2%        -0.96             96%     -0.22  Near zero
    5     62.4%        -0.97             96%     -0.37   Negative
";
    assert_eq!(table.to_text(), expected);
    for r in &table.rows {
        assert_eq!(r.report.ties, 0);
        assert!(!r.report.degenerate);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flip.csv");
    table.write_csv(&path).unwrap();
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let headers: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&headers[..6], ["epoch", "test_acc", "correlation", "sign_flip_rate", "mean_sum", "bias"]);
    let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 5);
    assert_eq!(&recs[3][5], "Near zero");
}

#[test]
fn bias_labels() {
    for (m, want) in [
        (-0.37, "Negative"),
        (-0.22, "Near zero"),
        (0.3, "Near zero"),
        (1.04, "Moderate"),
        (2.51, "High"),
        (26.1, "High"),
    ] {
        assert_eq!(bias_label(m), want, "{m}");
    }
}

fn source(spec: &SynthSpec) -> InMemorySource {
    InMemorySource::new(generate(spec).unwrap().pairs, 250).unwrap()
}

#[test]
fn pairwise_probe_tracks_the_oracle() {
    let spec = SynthSpec::default();
    let oracle = oracle_accuracy(&spec, Access::Pairwise, DEFAULT_ORACLE_SAMPLES);
    let r = pairwise_probe(&source(&spec), FeatureSource::FinalStep, &ProbeOptions::default()).unwrap();
    println!("pairwise probe {:.3} oracle {oracle:.3}", r.test_acc);
    assert!((r.test_acc - oracle).abs() <= 0.03, "probe {} oracle {oracle}", r.test_acc);
    assert!(r.intercept.abs() < 1e-3 * r.weight_norm.max(1.0));
}

#[test]
fn oracle_bounds_the_probes_at_low_snr() {
    // mean pooling blurs the signal span, so the probes fall short of the
    // span-aware oracle but never clear it
    for mode in [SignalMode::Relational, SignalMode::Absolute] {
        let spec = SynthSpec { mode, delta: 0.05, ..Default::default() };
        let src = source(&spec);
        let opts = ProbeOptions::default();
        let pw = pairwise_probe(&src, FeatureSource::AllStepsConcat, &opts).unwrap();
        let ind = independent_probe(&src, FeatureSource::AllStepsConcat, &opts).unwrap();
        let op = oracle_accuracy(&spec, Access::Pairwise, DEFAULT_ORACLE_SAMPLES);
        let oi = oracle_accuracy(&spec, Access::Independent, DEFAULT_ORACLE_SAMPLES);
        println!("{mode:?}: pairwise {:.3}/{op:.3} independent {:.3}/{oi:.3}", pw.test_acc, ind.test_acc);
        assert!(pw.test_acc <= op + 0.03);
        assert!(ind.test_acc <= oi + 0.03);
        assert!(pw.test_acc > 0.53);
    }
}

#[test]
fn relational_gap_between_probes() {
    let src = source(&SynthSpec::default());
    let opts = ProbeOptions::default();
    let pw = pairwise_probe(&src, FeatureSource::FinalStep, &opts).unwrap();
    let ind = independent_probe(&src, FeatureSource::FinalStep, &opts).unwrap();
    println!("pairwise {:.3} independent {:.3}", pw.test_acc, ind.test_acc);
    assert!(pw.test_acc >= ind.test_acc + 0.10);
    assert!(ind.test_acc <= 0.60);
    assert!((ind.flipped_test_acc - (1.0 - ind.test_acc)).abs() < 1e-12);
}

#[test]
fn noiseless_relational_pairwise_probe_is_perfect() {
    let spec = SynthSpec { n_pairs: 500, delta: 2.0, ..Default::default() };
    let r = pairwise_probe(&source(&spec), FeatureSource::AllStepsConcat, &ProbeOptions::default()).unwrap();
    assert_eq!(r.test_acc, 1.0);
}

#[test]
fn absolute_mode_is_readable_independently() {
    let spec = SynthSpec { mode: SignalMode::Absolute, ..Default::default() };
    let oracle = oracle_accuracy(&spec, Access::Independent, DEFAULT_ORACLE_SAMPLES);
    let r = independent_probe(&source(&spec), FeatureSource::AllStepsConcat, &ProbeOptions::default()).unwrap();
    println!("independent probe {:.3} oracle {oracle:.3}", r.test_acc);
    assert!((r.test_acc - oracle).abs() <= 0.03, "probe {} oracle {oracle}", r.test_acc);
}

#[test]
fn null_mode_is_chance() {
    let spec = SynthSpec { mode: SignalMode::Null, n_pairs: 4000, ..Default::default() };
    let src = source(&spec);
    for r in [
        pairwise_probe(&src, FeatureSource::FinalStep, &ProbeOptions::default()).unwrap(),
        independent_probe(&src, FeatureSource::FinalStep, &ProbeOptions::default()).unwrap(),
    ] {
        assert!((r.test_acc - 0.5).abs() <= 0.03, "{:?} {}", r.mode, r.test_acc);
    }
}

fn pair_with_tokens(rng: &mut impl Rng, i: usize, chosen: usize, rejected: usize) -> PreferencePair {
    let id = format!("p{i}");
    let a = common::random_record(rng, &id, 2, 30, 4, chosen);
    let b = common::random_record(rng, &id, 2, 30, 4, rejected);
    PreferencePair::new(id, a, b, LabelSource::Synthetic).unwrap()
}

#[test]
fn shortcut_length_example() {
    let mut rng = stream_id(1, 1);
    let pairs = vec![pair_with_tokens(&mut rng, 0, 10, 20), pair_with_tokens(&mut rng, 1, 30, 20)];
    let r = shortcut_analysis(&InMemorySource::new(pairs, 10).unwrap()).unwrap();
    assert_eq!(r.longer_is_chosen_acc, 0.5);
    assert_eq!((r.chosen_mean_tokens, r.rejected_mean_tokens), (20.0, 20.0));
}

#[test]
fn shortcut_identical_states() {
    let mut rng = stream_id(2, 2);
    let pairs: Vec<PreferencePair> = (0..5)
        .map(|i| {
            let id = format!("p{i}");
            let a = common::random_record(&mut rng, &id, 3, 8, 4, 5);
            PreferencePair::new(id, a.clone(), a, LabelSource::Synthetic).unwrap()
        })
        .collect();
    let r = shortcut_analysis(&InMemorySource::new(pairs, 2).unwrap()).unwrap();
    assert_eq!(r.mean_activation_ratio, vec![1.0; 3]);
    assert_eq!(r.larger_norm_is_chosen_acc, vec![0.5; 3]);
    assert_eq!(r.longer_is_chosen_acc, 0.5);
}

#[test]
fn synthetic_data_has_no_surface_shortcut() {
    let r = shortcut_analysis(&source(&SynthSpec::default())).unwrap();
    assert!((r.longer_is_chosen_acc - 0.5).abs() < 0.05);
    for (acc, ratio) in r.larger_norm_is_chosen_acc.iter().zip(&r.mean_activation_ratio) {
        assert!((acc - 0.5).abs() < 0.05, "{acc}");
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }
}

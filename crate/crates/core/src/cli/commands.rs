use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::args::*;
use super::manifest::ManifestBuilder;
use crate::diagnostics::{
    bias_label, cross_epoch_flip, flip_test_model, independent_probe, pairwise_probe, shortcut_analysis, FlipReport,
    ProbeMode, ProbeOptions, ProbeReport, ShortcutReport,
};
use crate::evaluators::{
    count_parameters, load_checkpoint, ArchitectureConfig, CheckpointMeta, Evaluator, LinearConfig, PairwiseConfig,
    PointwiseV1Config, PointwiseV2Config,
};
use crate::features::{Dataset, PairSource};
use crate::synth::{generate, write_synth, GroundTruth, SynthDataset, SynthSpec, GROUND_TRUTH_FILE};
use crate::training::{fixed_order_eval, inversion_warnings, train, EpochMetrics, LossKind, RunDir, TrainConfig};
use crate::{Error, Result};

/// Successful exit.
pub const EXIT_OK: i32 = 0;
/// A diagnostic gate failed (degenerate model).
pub const EXIT_GATE: i32 = 4;

/// Result of one command: its exit code and output directory.
pub(crate) struct Done {
    pub code: i32,
    pub dir: PathBuf,
}

fn short_hash(v: &impl Serialize) -> String {
    let json = serde_json::to_string(v).expect("arguments serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(6).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn out_dir(explicit: &Option<PathBuf>, root: &Path, name: &str, args: &impl Serialize) -> PathBuf {
    explicit.clone().unwrap_or_else(|| root.join(format!("{name}-{}", short_hash(args))))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::at(parent, e.into()))?;
    }
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").map_err(|e| Error::at(path, e.into()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::at(path, e.into()))
}

fn open_dataset(path: &Path) -> Result<Dataset> {
    Dataset::open(path)
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

// ---- synth ---------------------------------------------------------------

fn synth_spec(a: &SynthArgs, n_pairs: usize) -> SynthSpec {
    let d = SynthSpec::default();
    SynthSpec {
        n_pairs,
        d: a.dim.unwrap_or(d.d),
        seq_len: a.seq_len.unwrap_or(d.seq_len),
        steps: a.steps.unwrap_or(d.steps),
        mode: a.mode,
        delta: a.delta.unwrap_or(d.delta),
        sigma_base: a.sigma_base.unwrap_or(d.sigma_base),
        sigma_noise: a.sigma_noise.unwrap_or(d.sigma_noise),
        response_span: a.response_span.unwrap_or(d.response_span),
        temporal_ramp: a.temporal_ramp,
        label_noise_rate: a.label_noise.unwrap_or(d.label_noise_rate),
        seed: a.seed.unwrap_or(d.seed),
    }
}

fn split_dataset(data: &SynthDataset, range: std::ops::Range<usize>) -> SynthDataset {
    let mut truth = data.truth.clone();
    truth.pairs = truth.pairs[range.clone()].to_vec();
    SynthDataset { pairs: data.pairs[range].to_vec(), truth }
}

pub(crate) fn synth(a: &SynthArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    if a.pairs == 0 {
        return Err(Error::Config("--pairs must be positive".into()));
    }
    let n_eval = a.eval_pairs.unwrap_or(0);
    let spec = synth_spec(a, a.pairs + n_eval);
    spec.validate()?;
    m.seed = Some(spec.seed);
    let dir = a.out.clone().unwrap_or_else(|| root.join(format!("synth-{}", &spec.hash()[..12])));
    let data = generate(&spec)?;
    if a.eval_pairs.is_some() {
        for (split, range) in [("train", 0..a.pairs), ("eval", a.pairs..a.pairs + n_eval)] {
            let sub = dir.join(split);
            let manifest = write_synth(&sub, split, &split_dataset(&data, range), a.chunk_size)?;
            println!(
                "{split}: {} pairs in {} chunks -> {}",
                manifest.total_pairs,
                manifest.chunks.len(),
                sub.display()
            );
            m.outputs.push(sub);
        }
    } else {
        let manifest = write_synth(&dir, "train", &data, a.chunk_size)?;
        println!("{} pairs in {} chunks -> {}", manifest.total_pairs, manifest.chunks.len(), dir.display());
        m.outputs.push(dir.clone());
    }
    println!(
        "oracle accuracy  pairwise {:.4}  independent {:.4}",
        data.truth.oracle_pairwise, data.truth.oracle_independent
    );
    Ok(Done { code: EXIT_OK, dir })
}

// ---- train ---------------------------------------------------------------

/// What `train` records in the run's `config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRunConfig {
    pub train_data: PathBuf,
    pub eval_data: Option<PathBuf>,
    pub architecture: ArchitectureConfig,
    pub num_parameters: usize,
    pub train: TrainConfig,
}

fn default_loss(arch: &ArchitectureConfig) -> LossKind {
    match arch {
        ArchitectureConfig::Pairwise(_) => LossKind::PairwiseSwap,
        ArchitectureConfig::Calibrated(_) => LossKind::Calibrated,
        _ => LossKind::PointwiseRanking,
    }
}

fn build_arch(a: &TrainArgs, steps: usize, dim: usize) -> Result<ArchitectureConfig> {
    let mut arch = if let Some(path) = &a.arch_config {
        let text = fs::read_to_string(path).map_err(|e| Error::at(path, e.into()))?;
        serde_json::from_str(&text).map_err(|e| Error::at(path, e.into()))?
    } else {
        let desk = a.preset == Preset::Desk;
        let pw = || if desk { PairwiseConfig::desk(dim) } else { PairwiseConfig { d_in: dim, ..Default::default() } };
        let v2 =
            || if desk { PointwiseV2Config::desk(dim) } else { PointwiseV2Config { d_in: dim, ..Default::default() } };
        match a.arch {
            ArchKind::Pairwise => ArchitectureConfig::Pairwise(pw()),
            ArchKind::PointwiseV2 => ArchitectureConfig::PointwiseV2(v2()),
            ArchKind::Calibrated => ArchitectureConfig::Calibrated(v2()),
            ArchKind::PointwiseV1 => ArchitectureConfig::PointwiseV1(PointwiseV1Config {
                d_in: dim,
                steps,
                hidden: if desk { 32 } else { PointwiseV1Config::default().hidden },
            }),
            ArchKind::Linear => ArchitectureConfig::Linear(LinearConfig { d_in: dim, steps }),
        }
    };
    let set = |dst: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    let setb = |dst: &mut bool, v: Option<bool>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    match &mut arch {
        ArchitectureConfig::Pairwise(c) => {
            set(&mut c.pool_rank, a.pool_rank);
            set(&mut c.proj_dim, a.proj_dim);
            set(&mut c.gru_layers, a.gru_layers);
            set(&mut c.gru_hidden, a.gru_hidden);
            set(&mut c.scorer_hidden, a.scorer_hidden);
            setb(&mut c.ln_bias, a.ln_bias);
            setb(&mut c.proj_bias, a.proj_bias);
            setb(&mut c.pre_diff_norm, a.pre_diff_norm);
        }
        ArchitectureConfig::PointwiseV2(c) | ArchitectureConfig::Calibrated(c) => {
            set(&mut c.pool_rank, a.pool_rank);
            set(&mut c.proj_dim, a.proj_dim);
            set(&mut c.gru_layers, a.gru_layers);
            set(&mut c.gru_hidden, a.gru_hidden);
            set(&mut c.scorer_hidden, a.scorer_hidden);
            setb(&mut c.ln_bias, a.ln_bias);
            setb(&mut c.proj_bias, a.proj_bias);
        }
        ArchitectureConfig::PointwiseV1(c) => set(&mut c.hidden, a.hidden),
        ArchitectureConfig::Linear(_) => {}
    }
    arch.validate()?;
    Ok(arch)
}

fn build_train_config(a: &TrainArgs, arch: &ArchitectureConfig, n_train: usize) -> Result<TrainConfig> {
    let epochs = a.epochs.unwrap_or(TrainConfig::default().epochs);
    let mut c = match a.preset {
        Preset::Paper => TrainConfig::default(),
        Preset::Desk => TrainConfig::desk(n_train, epochs),
    };
    c.loss = default_loss(arch);
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Error::at(path, e.into()))?;
        c = serde_json::from_str(&text).map_err(|e| Error::at(path, e.into()))?;
    }
    macro_rules! apply {
        ($($field:ident = $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag { c.$field = v; })*
        };
    }
    apply!(
        loss = a.loss,
        lr_max = a.lr_max,
        lr_min = a.lr_min,
        warmup_steps = a.warmup_steps,
        batch_size = a.batch_size,
        grad_accum_steps = a.grad_accum_steps,
        weight_decay = a.weight_decay,
        clip_norm = a.clip_norm,
        epochs = a.epochs,
        swap_prob = a.swap_prob,
        l2_score_coeff = a.l2_score_coeff,
        dropout_rate = a.dropout,
        seed = a.seed,
    );
    c.validate()?;
    Ok(c)
}

fn epoch_row(m: &EpochMetrics) -> String {
    format!(
        "{:>5}  {:>8.4}  {:>14}  {:>17}  {:>16}  {:>9.2e}",
        m.epoch,
        m.mean_loss,
        pct(m.deflated_acc),
        pct(m.fixed_order_train_acc),
        m.fixed_order_acc.map_or("-".into(), pct),
        m.lr_last
    )
}

pub(crate) fn train_cmd(a: &TrainArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let train_ds = open_dataset(&a.train)?;
    let eval_ds = a.eval.as_deref().map(open_dataset).transpose()?;
    let (steps, dim, _) = train_ds.geometry();
    if let Some(e) = &eval_ds {
        let (s2, d2, _) = e.geometry();
        if (s2, d2) != (steps, dim) {
            return Err(Error::shape("held-out geometry", format!("[{steps}, _, {dim}]"), format!("[{s2}, _, {d2}]")));
        }
    }
    let arch = build_arch(a, steps, dim)?;
    let config = build_train_config(a, &arch, train_ds.total_pairs())?;
    m.seed = Some(config.seed);
    m.inputs.push(a.train.clone());
    m.inputs.extend(a.eval.clone());

    let echo = TrainRunConfig {
        train_data: a.train.clone(),
        eval_data: a.eval.clone(),
        architecture: arch.clone().with_dropout(config.dropout_rate),
        num_parameters: count_parameters(&arch),
        train: config.clone(),
    };
    let dir = out_dir(&a.out, root, "train", &echo);
    let run = RunDir::create(&dir, &echo)?;
    println!(
        "{} evaluator, {} parameters, loss {:?}, {} pairs, {} update steps",
        arch.tag(),
        echo.num_parameters,
        config.loss,
        train_ds.total_pairs(),
        config.total_steps(train_ds.total_pairs())
    );
    println!(
        "{:>5}  {:>8}  {:>14}  {:>17}  {:>16}  {:>9}",
        "epoch", "loss", "deflated train", "fixed-order train", "fixed-order eval", "lr"
    );
    let mut seen = Vec::new();
    let outcome =
        train(&config, &arch, &train_ds, eval_ds.as_ref().map(|d| d as &dyn PairSource), |metrics, model| {
            println!("{}", epoch_row(metrics));
            seen.push(metrics.clone());
            run.record_epoch(&seen, model, config.seed)?;
            Ok(())
        })?;
    if outcome.metrics.is_empty() {
        run.write_metrics(&[])?;
    }
    for w in inversion_warnings(&outcome.metrics) {
        println!("WARNING: {w}");
    }
    m.outputs.push(dir.clone());
    Ok(Done { code: EXIT_OK, dir })
}

// ---- eval ----------------------------------------------------------------

/// Resolves a checkpoint file or a run directory's latest checkpoint.
fn resolve_checkpoint(path: &Path) -> Result<PathBuf> {
    if path.is_dir() {
        let run = RunDir::open(path)?;
        return run
            .checkpoints()?
            .pop()
            .map(|(_, p)| p)
            .ok_or_else(|| Error::at(path, Error::MissingArtifact("checkpoint".into())));
    }
    Ok(path.to_path_buf())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: PathBuf,
    pub architecture: String,
    pub epoch: usize,
    pub pairs: usize,
    pub test_accuracy: f64,
    pub average_score: f64,
    pub score_std: f64,
    pub score_range: (f64, f64),
    pub positive_rate: f64,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        format!(
            "{} epoch {} on {} pairs\nTest accuracy   {}\nAverage score   {:+.4}\nScore std       {:.4}\nScore range     [{:+.2}, {:+.2}]\nPositive rate   {}\n",
            self.architecture,
            self.epoch,
            self.pairs,
            pct(self.test_accuracy),
            self.average_score,
            self.score_std,
            self.score_range.0,
            self.score_range.1,
            pct(self.positive_rate)
        )
    }
}

fn load(path: &Path) -> Result<(Evaluator<f32>, CheckpointMeta, PathBuf)> {
    let file = resolve_checkpoint(path)?;
    let (model, meta) = load_checkpoint(&file)?;
    Ok((model, meta, file))
}

fn check_geometry(model: &Evaluator<f32>, data: &Dataset) -> Result<()> {
    let (steps, dim, _) = data.geometry();
    let cfg = model.config();
    if cfg.d_in() != dim {
        return Err(Error::at(data.root(), Error::shape("feature dimension for the checkpoint", cfg.d_in(), dim)));
    }
    if let Some(s) = cfg.fixed_steps() {
        if s != steps {
            return Err(Error::at(data.root(), Error::shape("loop steps for the checkpoint", s, steps)));
        }
    }
    Ok(())
}

pub(crate) fn eval(a: &EvalArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let (model, meta, file) = load(&a.checkpoint)?;
    let data = open_dataset(&a.data)?;
    check_geometry(&model, &data)?;
    m.inputs = vec![file.clone(), a.data.clone()];
    m.seed = Some(meta.seed);
    let r = fixed_order_eval(&model, &data)?;
    let report = EvalReport {
        checkpoint: file,
        architecture: meta.architecture,
        epoch: meta.epoch,
        pairs: r.stats.n,
        test_accuracy: r.accuracy,
        average_score: r.stats.mean,
        score_std: r.stats.std,
        score_range: (r.stats.min, r.stats.max),
        positive_rate: r.stats.positive_rate,
    };
    let dir = out_dir(&a.out, root, "eval", a);
    emit(&dir, "eval", &report, &report.to_text(), m)?;
    Ok(Done { code: EXIT_OK, dir })
}

fn emit(dir: &Path, stem: &str, v: &impl Serialize, text: &str, m: &mut ManifestBuilder) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::at(dir, e.into()))?;
    let json = dir.join(format!("{stem}.json"));
    let txt = dir.join(format!("{stem}.txt"));
    write_json(&json, v)?;
    write_text(&txt, text)?;
    print!("{text}");
    m.outputs.push(json);
    m.outputs.push(txt);
    Ok(())
}

// ---- fliptest ------------------------------------------------------------

fn flip_text(r: &FlipReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "pairs            {}", r.n);
    let _ = writeln!(
        s,
        "correlation      {}",
        r.antisym_correlation.map_or("n/a".into(), |c| format!("{c:+.3} ({:?})", r.correlation_kind))
    );
    let _ = writeln!(s, "sign flip rate   {} ({} ties)", pct(r.sign_flip_rate), r.ties);
    let _ = writeln!(s, "mean sum         {:+.3} ({})", r.mean_sum, bias_label(r.mean_sum));
    let _ = writeln!(s, "normal range     [{:+.2}, {:+.2}]", r.normal_range.0, r.normal_range.1);
    let _ = writeln!(s, "flipped range    [{:+.2}, {:+.2}]", r.flipped_range.0, r.flipped_range.1);
    if r.degenerate {
        let _ = writeln!(s, "DEGENERATE: {}", r.degeneracy_reason);
    } else {
        let _ = writeln!(s, "not degenerate");
    }
    s
}

pub(crate) fn fliptest(a: &FliptestArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let files: Vec<PathBuf> = match &a.run {
        Some(run) => RunDir::open(run)?.checkpoints()?.into_iter().map(|(_, p)| p).collect(),
        None => a.checkpoint.iter().map(|p| resolve_checkpoint(p)).collect::<Result<_>>()?,
    };
    if files.is_empty() {
        return Err(Error::MissingArtifact("no checkpoint given (use --checkpoint or --run)".into()));
    }
    let data = open_dataset(&a.data)?;
    let mut models = Vec::with_capacity(files.len());
    for f in &files {
        let (model, meta) = load_checkpoint(f)?;
        check_geometry(&model, &data)?;
        m.seed.get_or_insert(meta.seed);
        models.push((meta.epoch, model));
    }
    m.inputs = files.clone();
    m.inputs.push(a.data.clone());
    let dir = out_dir(&a.out, root, "fliptest", a);
    let degenerate = if models.len() == 1 {
        let report = flip_test_model(&models[0].1, &data, a.correlation)?;
        emit(&dir, "fliptest", &report, &flip_text(&report), m)?;
        report.degenerate
    } else {
        let refs: Vec<(usize, &Evaluator<f32>)> = models.iter().map(|(e, mdl)| (*e, mdl)).collect();
        let table = cross_epoch_flip(&refs, &data, a.correlation)?;
        emit(&dir, "cross_epoch", &table, &table.to_text(), m)?;
        let csv = dir.join("cross_epoch.csv");
        table.write_csv(&csv)?;
        m.outputs.push(csv);
        for row in table.rows.iter().filter(|r| r.report.degenerate) {
            println!("DEGENERATE at epoch {}: {}", row.epoch, row.report.degeneracy_reason);
        }
        table.rows.iter().any(|r| r.report.degenerate)
    };
    Ok(Done { code: if degenerate { EXIT_GATE } else { EXIT_OK }, dir })
}

// ---- probe / shortcut ----------------------------------------------------

fn probe_text(r: &ProbeReport) -> String {
    format!(
        "{:?} probe on {:?} features\ntrain pairs {}  test pairs {}\ntrain accuracy    {}\ntest accuracy     {}\nflipped accuracy  {}\nweight norm {:.4}  intercept {:+.4}  iterations {}  converged {}\n",
        r.mode,
        r.feature_source,
        r.train_pairs,
        r.test_pairs,
        pct(r.train_acc),
        pct(r.test_acc),
        pct(r.flipped_test_acc),
        r.weight_norm,
        r.intercept,
        r.iterations,
        r.converged
    )
}

pub(crate) fn probe(a: &ProbeArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let data = open_dataset(&a.data)?;
    let d = ProbeOptions::default();
    let opts = ProbeOptions {
        lambda: a.lambda.unwrap_or(d.lambda),
        train_frac: a.train_frac.unwrap_or(d.train_frac),
        seed: a.seed.unwrap_or(d.seed),
        ..d
    };
    m.seed = Some(opts.seed);
    m.inputs.push(a.data.clone());
    let report = match a.mode {
        ProbeMode::PairwiseDiff => pairwise_probe(&data, a.features, &opts)?,
        ProbeMode::Independent => independent_probe(&data, a.features, &opts)?,
    };
    let dir = out_dir(&a.out, root, "probe", a);
    emit(&dir, "probe", &report, &probe_text(&report), m)?;
    Ok(Done { code: EXIT_OK, dir })
}

fn shortcut_text(r: &ShortcutReport) -> String {
    let mut s = format!(
        "pairs {}\nmean tokens  chosen {:.2}  rejected {:.2}\nlonger = chosen       {}\n",
        r.n,
        r.chosen_mean_tokens,
        r.rejected_mean_tokens,
        pct(r.longer_is_chosen_acc)
    );
    for (t, (acc, ratio)) in r.larger_norm_is_chosen_acc.iter().zip(&r.mean_activation_ratio).enumerate() {
        let _ = writeln!(s, "step {}: larger norm = chosen {}  activation ratio {:.4}", t + 1, pct(*acc), ratio);
    }
    s
}

pub(crate) fn shortcut(a: &ShortcutArgs, root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let data = open_dataset(&a.data)?;
    m.inputs.push(a.data.clone());
    let report = shortcut_analysis(&data)?;
    let dir = out_dir(&a.out, root, "shortcut", a);
    emit(&dir, "shortcut", &report, &shortcut_text(&report), m)?;
    Ok(Done { code: EXIT_OK, dir })
}

// ---- figures -------------------------------------------------------------

pub const FIG1_CSV: &str = "fig1_access_pattern.csv";
pub const FIG2_CSV: &str = "fig2_cross_epoch_flip.csv";
pub const FIG3_CSV: &str = "fig3_metric_inversion.csv";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::at(path, Error::InvalidRecord(e.to_string()))
}

fn run_config(run: &RunDir) -> Result<TrainRunConfig> {
    let path = run.config_path();
    let text = fs::read_to_string(&path).map_err(|e| Error::at(&path, e.into()))?;
    serde_json::from_str(&text).map_err(|e| Error::at(&path, e.into()))
}

fn load_metrics(run: &RunDir) -> Result<Vec<EpochMetrics>> {
    let metrics = run.load_metrics()?;
    if metrics.is_empty() {
        return Err(Error::at(run.root(), Error::MissingArtifact("epoch metrics".into())));
    }
    Ok(metrics)
}

fn final_eval_acc(metrics: &[EpochMetrics]) -> f64 {
    let last = metrics.last().expect("nonempty metrics");
    last.fixed_order_acc.unwrap_or(last.fixed_order_train_acc)
}

pub(crate) fn figures(a: &FiguresArgs, _root: &Path, m: &mut ManifestBuilder) -> Result<Done> {
    let run = RunDir::open(&a.run)?;
    let metrics = load_metrics(&run)?;
    let config = run_config(&run)?;
    m.seed = Some(config.train.seed);
    m.inputs.push(a.run.clone());
    let dir = a.out.clone().unwrap_or_else(|| a.run.join("figures"));
    fs::create_dir_all(&dir).map_err(|e| Error::at(&dir, e.into()))?;

    // fig 3: the deflated training metric against held-out fixed order
    let p3 = dir.join(FIG3_CSV);
    {
        let mut w = csv::Writer::from_path(&p3).map_err(csv_err(&p3))?;
        w.write_record(["epoch", "deflated_train_acc", "fixed_order_eval_acc", "fixed_order_train_acc"])
            .map_err(csv_err(&p3))?;
        for e in &metrics {
            w.write_record([
                e.epoch.to_string(),
                e.deflated_acc.to_string(),
                e.fixed_order_acc.map_or(String::new(), |v| v.to_string()),
                e.fixed_order_train_acc.to_string(),
            ])
            .map_err(csv_err(&p3))?;
        }
        w.flush().map_err(|e| Error::at(&p3, e.into()))?;
    }
    m.outputs.push(p3);

    let data_path = a.data.clone().or(config.eval_data.clone()).unwrap_or(config.train_data.clone());
    let data = open_dataset(&data_path)?;
    m.inputs.push(data_path.clone());

    // fig 2: flip test over every checkpoint
    let mut models = Vec::new();
    for (epoch, path) in run.checkpoints()? {
        models.push((epoch, load_checkpoint(&path)?.0));
    }
    if models.is_empty() {
        return Err(Error::at(run.root(), Error::MissingArtifact("checkpoints".into())));
    }
    let p2 = dir.join(FIG2_CSV);
    if models[0].1.is_pairwise() {
        let refs: Vec<(usize, &Evaluator<f32>)> = models.iter().map(|(e, mdl)| (*e, mdl)).collect();
        let table = cross_epoch_flip(&refs, &data, a.correlation)?;
        let mut w = csv::Writer::from_path(&p2).map_err(csv_err(&p2))?;
        w.write_record(["epoch", "correlation", "sign_flip_rate", "mean_sum", "test_acc"]).map_err(csv_err(&p2))?;
        for row in &table.rows {
            let r = &row.report;
            w.write_record([
                row.epoch.to_string(),
                r.antisym_correlation.map_or(String::new(), |c| c.to_string()),
                r.sign_flip_rate.to_string(),
                r.mean_sum.to_string(),
                row.fixed_order_acc.to_string(),
            ])
            .map_err(csv_err(&p2))?;
        }
        w.flush().map_err(|e| Error::at(&p2, e.into()))?;
        print!("{}", table.to_text());
        m.outputs.push(p2);
    } else {
        println!("{} skipped: the run is not pairwise", FIG2_CSV);
    }

    // fig 1: accuracy by access pattern
    let mut bars: Vec<(&str, &str, f64)> = Vec::new();
    let truth_path = data_path.join(GROUND_TRUTH_FILE);
    if truth_path.exists() {
        let text = fs::read_to_string(&truth_path).map_err(|e| Error::at(&truth_path, e.into()))?;
        let truth: GroundTruth = serde_json::from_str(&text).map_err(|e| Error::at(&truth_path, e.into()))?;
        bars.push(("pairwise", "oracle", truth.oracle_pairwise));
        bars.push(("independent", "oracle", truth.oracle_independent));
    }
    let opts = ProbeOptions::default();
    let features = Default::default();
    bars.push(("pairwise", "linear_probe", pairwise_probe(&data, features, &opts)?.test_acc));
    bars.push(("independent", "linear_probe", independent_probe(&data, features, &opts)?.test_acc));
    let access = |arch: &ArchitectureConfig| if arch.is_pairwise() { "pairwise" } else { "independent" };
    bars.push((access(&config.architecture), "evaluator", final_eval_acc(&metrics)));
    if let Some(pr) = &a.pointwise_run {
        let prun = RunDir::open(pr)?;
        let pcfg = run_config(&prun)?;
        bars.push((access(&pcfg.architecture), "evaluator", final_eval_acc(&load_metrics(&prun)?)));
        m.inputs.push(pr.clone());
    }
    let p1 = dir.join(FIG1_CSV);
    let mut w = csv::Writer::from_path(&p1).map_err(csv_err(&p1))?;
    w.write_record(["access_pattern", "method", "accuracy"]).map_err(csv_err(&p1))?;
    for (acc_pattern, method, v) in &bars {
        w.write_record([acc_pattern.to_string(), method.to_string(), v.to_string()]).map_err(csv_err(&p1))?;
        println!("{acc_pattern:<12} {method:<13} {}", pct(*v));
    }
    w.flush().map_err(|e| Error::at(&p1, e.into()))?;
    m.outputs.push(p1);
    Ok(Done { code: EXIT_OK, dir })
}

// ---- validate ------------------------------------------------------------

pub(crate) fn validate(a: &ValidateArgs, _root: &Path, m: &mut ManifestBuilder) -> Result<Option<Done>> {
    for path in &a.data {
        let ds = open_dataset(path)?;
        let n = ds.validate()?;
        let (t, d, l) = ds.geometry();
        println!("{}: ok, {n} pairs, {} chunks, [T={t}, L={l}, d={d}]", path.display(), ds.num_chunks());
        m.inputs.push(path.clone());
    }
    Ok(None)
}

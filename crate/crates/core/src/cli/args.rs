use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diagnostics::{CorrelationKind, FeatureSource, ProbeMode};
use crate::features::DEFAULT_CHUNK_SIZE;
use crate::synth::SignalMode;
use crate::training::LossKind;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "looplab", version, about = "Preference evaluators over looped-transformer loop states")]
pub struct Cli {
    /// Root for output directories of commands run without `--out`.
    #[arg(long, env = "LOOPLAB_OUT_ROOT", default_value = "runs", global = true)]
    pub out_root: PathBuf,

    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    #[serde(skip)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic dataset with a known oracle.
    Synth(SynthArgs),
    /// Train an evaluator; writes checkpoints and metrics per epoch.
    Train(TrainArgs),
    /// Fixed-order accuracy and score statistics of a checkpoint.
    Eval(EvalArgs),
    /// Flip test of one or more pairwise checkpoints. Exits 4 on degeneracy.
    Fliptest(FliptestArgs),
    /// Linear probe on pooled loop-state features.
    Probe(ProbeArgs),
    /// Surface-statistic shortcut analysis.
    Shortcut(ShortcutArgs),
    /// Plot-data CSVs for a completed run.
    Figures(FiguresArgs),
    /// Check datasets end to end.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Fliptest(_) => "fliptest",
            Command::Probe(_) => "probe",
            Command::Shortcut(_) => "shortcut",
            Command::Figures(_) => "figures",
            Command::Validate(_) => "validate",
        }
    }
}

/// Unset flags take the library defaults.
#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SignalMode::Relational)]
    pub mode: SignalMode,
    #[arg(long)]
    pub pairs: usize,
    /// Additional held-out pairs; with this set, `train/` and `eval/`
    /// subdirectories are written.
    #[arg(long)]
    pub eval_pairs: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma_base: Option<f64>,
    #[arg(long)]
    pub sigma_noise: Option<f64>,
    #[arg(long)]
    pub response_span: Option<usize>,
    #[arg(long)]
    pub temporal_ramp: bool,
    #[arg(long)]
    pub label_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ArchKind {
    Pairwise,
    PointwiseV1,
    PointwiseV2,
    Calibrated,
    Linear,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    /// Full-size architecture and the published training hyperparameters.
    #[default]
    Paper,
    /// Small architecture and a higher learning rate for synthetic data.
    Desk,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    /// Training dataset directory.
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out dataset directory for fixed-order evaluation.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ArchKind::Pairwise)]
    pub arch: ArchKind,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    /// Architecture JSON; replaces `--arch` and `--preset` sizes.
    #[arg(long)]
    pub arch_config: Option<PathBuf>,
    /// Training-config JSON, applied over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub pool_rank: Option<usize>,
    #[arg(long)]
    pub proj_dim: Option<usize>,
    #[arg(long)]
    pub gru_layers: Option<usize>,
    #[arg(long)]
    pub gru_hidden: Option<usize>,
    #[arg(long)]
    pub scorer_hidden: Option<usize>,
    /// Hidden width of the V1 evaluator.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub ln_bias: Option<bool>,
    #[arg(long)]
    pub proj_bias: Option<bool>,
    #[arg(long)]
    pub pre_diff_norm: Option<bool>,

    /// Defaults to the loss that fits `--arch`.
    #[arg(long, value_enum)]
    pub loss: Option<LossKind>,
    #[arg(long)]
    pub lr_max: Option<f64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    #[arg(long)]
    pub warmup_steps: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub grad_accum_steps: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub swap_prob: Option<f64>,
    #[arg(long)]
    pub l2_score_coeff: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    /// Checkpoint JSON, or a run directory for its latest checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FliptestArgs {
    /// Checkpoint JSON; repeat for a cross-epoch table.
    #[arg(long)]
    pub checkpoint: Vec<PathBuf>,
    /// Run directory; every checkpoint in it is tested.
    #[arg(long, conflicts_with = "checkpoint")]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = CorrelationKind::Pearson)]
    pub correlation: CorrelationKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ProbeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ProbeMode::PairwiseDiff)]
    pub mode: ProbeMode,
    #[arg(long, value_enum, default_value_t = FeatureSource::FinalStep)]
    pub features: FeatureSource,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShortcutArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FiguresArgs {
    /// Pairwise training run.
    #[arg(long)]
    pub run: PathBuf,
    /// Pointwise training run for the independent-access bar.
    #[arg(long)]
    pub pointwise_run: Option<PathBuf>,
    /// Dataset for the flip test and probes; defaults to the run's held-out
    /// split.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CorrelationKind::Pearson)]
    pub correlation: CorrelationKind,
    /// Defaults to `<run>/figures`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValidateArgs {
    /// Dataset directory; repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
}

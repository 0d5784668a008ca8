use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairwiseConfig {
    pub d_in: usize,
    pub pool_rank: usize,
    pub proj_dim: usize,
    pub gru_layers: usize,
    pub gru_hidden: usize,
    pub scorer_hidden: usize,
    pub dropout_rate: f64,
    /// A biased difference norm breaks oddness; only the degenerate
    /// baseline sets it.
    pub ln_bias: bool,
    pub proj_bias: bool,
    /// Normalize each side before differencing (`LN(a) - LN(b)`).
    pub pre_diff_norm: bool,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        Self {
            d_in: 2048,
            pool_rank: 128,
            proj_dim: 512,
            gru_layers: 2,
            gru_hidden: 512,
            scorer_hidden: 256,
            dropout_rate: 0.1,
            ln_bias: false,
            proj_bias: false,
            pre_diff_norm: false,
        }
    }
}

impl PairwiseConfig {
    /// A small configuration for desk-scale synthetic data.
    pub fn desk(d_in: usize) -> Self {
        Self {
            d_in,
            pool_rank: 16.min(d_in),
            proj_dim: 32,
            gru_layers: 2,
            gru_hidden: 32,
            scorer_hidden: 32,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointwiseV2Config {
    pub d_in: usize,
    pub pool_rank: usize,
    pub proj_dim: usize,
    pub gru_layers: usize,
    pub gru_hidden: usize,
    pub scorer_hidden: usize,
    pub dropout_rate: f64,
    pub ln_bias: bool,
    pub proj_bias: bool,
}

impl Default for PointwiseV2Config {
    fn default() -> Self {
        Self {
            d_in: 2048,
            pool_rank: 128,
            proj_dim: 512,
            gru_layers: 2,
            gru_hidden: 512,
            scorer_hidden: 256,
            dropout_rate: 0.1,
            ln_bias: true,
            proj_bias: true,
        }
    }
}

impl PointwiseV2Config {
    pub fn desk(d_in: usize) -> Self {
        Self { d_in, pool_rank: 16.min(d_in), proj_dim: 32, gru_hidden: 32, scorer_hidden: 32, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointwiseV1Config {
    pub d_in: usize,
    pub steps: usize,
    pub hidden: usize,
}

impl Default for PointwiseV1Config {
    fn default() -> Self {
        Self { d_in: 2048, steps: 4, hidden: 512 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub d_in: usize,
    pub steps: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { d_in: 2048, steps: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
pub enum ArchitectureConfig {
    Pairwise(PairwiseConfig),
    PointwiseV1(PointwiseV1Config),
    PointwiseV2(PointwiseV2Config),
    /// V2 weights trained with the ranking + BCE loss.
    Calibrated(PointwiseV2Config),
    Linear(LinearConfig),
}

impl ArchitectureConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            ArchitectureConfig::Pairwise(_) => "pairwise",
            ArchitectureConfig::PointwiseV1(_) => "pointwise_v1",
            ArchitectureConfig::PointwiseV2(_) => "pointwise_v2",
            ArchitectureConfig::Calibrated(_) => "calibrated",
            ArchitectureConfig::Linear(_) => "linear",
        }
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, ArchitectureConfig::Pairwise(_))
    }

    pub fn d_in(&self) -> usize {
        match self {
            ArchitectureConfig::Pairwise(c) => c.d_in,
            ArchitectureConfig::PointwiseV1(c) => c.d_in,
            ArchitectureConfig::PointwiseV2(c) | ArchitectureConfig::Calibrated(c) => c.d_in,
            ArchitectureConfig::Linear(c) => c.d_in,
        }
    }

    /// Same architecture with its dropout rate replaced; a no-op for
    /// architectures without dropout.
    pub fn with_dropout(mut self, rate: f64) -> Self {
        match &mut self {
            ArchitectureConfig::Pairwise(c) => c.dropout_rate = rate,
            ArchitectureConfig::PointwiseV2(c) | ArchitectureConfig::Calibrated(c) => c.dropout_rate = rate,
            _ => {}
        }
        self
    }

    /// Loop steps the architecture is tied to, if any.
    pub fn fixed_steps(&self) -> Option<usize> {
        match self {
            ArchitectureConfig::PointwiseV1(c) => Some(c.steps),
            ArchitectureConfig::Linear(c) => Some(c.steps),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        let rate = |p: f64| {
            if (0.0..1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("dropout_rate must be in [0, 1), got {p}")))
            }
        };
        let trunk = |d: usize, r: usize, p: usize, l: usize, h: usize, s: usize| -> Result<()> {
            for (n, v) in [
                ("d_in", d),
                ("pool_rank", r),
                ("proj_dim", p),
                ("gru_layers", l),
                ("gru_hidden", h),
                ("scorer_hidden", s),
            ] {
                positive(n, v)?;
            }
            if r > d {
                return Err(Error::Config(format!("pool_rank {r} exceeds d_in {d}")));
            }
            Ok(())
        };
        match self {
            ArchitectureConfig::Pairwise(c) => {
                if c.ln_bias {
                    log::warn!(
                        "pairwise evaluator with a biased difference LayerNorm is not antisymmetric by construction"
                    );
                }
                trunk(c.d_in, c.pool_rank, c.proj_dim, c.gru_layers, c.gru_hidden, c.scorer_hidden)?;
                rate(c.dropout_rate)
            }
            ArchitectureConfig::PointwiseV2(c) | ArchitectureConfig::Calibrated(c) => {
                trunk(c.d_in, c.pool_rank, c.proj_dim, c.gru_layers, c.gru_hidden, c.scorer_hidden)?;
                rate(c.dropout_rate)
            }
            ArchitectureConfig::PointwiseV1(c) => {
                positive("d_in", c.d_in)?;
                positive("steps", c.steps)?;
                positive("hidden", c.hidden)
            }
            ArchitectureConfig::Linear(c) => {
                positive("d_in", c.d_in)?;
                positive("steps", c.steps)
            }
        }
    }
}

fn gru_count(input: usize, hidden: usize, layers: usize) -> usize {
    (0..layers)
        .map(|l| {
            let i = if l == 0 { input } else { hidden };
            3 * hidden * i + 3 * hidden * hidden + 6 * hidden
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn trunk_count(d: usize, r: usize, p: usize, l: usize, h: usize, s: usize, ln_bias: bool, proj_bias: bool) -> usize {
    let pool = d * r + r;
    let norm = if ln_bias { 2 * d } else { d };
    let proj = d * p + if proj_bias { p } else { 0 };
    let combined = h + p;
    let scorer = 2 * combined + combined * s + s + s + 1;
    pool + norm + proj + gru_count(p, h, l) + scorer
}

/// Exact number of learnable scalars for a configuration.
pub fn count_parameters(config: &ArchitectureConfig) -> usize {
    match config {
        ArchitectureConfig::Pairwise(c) => trunk_count(
            c.d_in,
            c.pool_rank,
            c.proj_dim,
            c.gru_layers,
            c.gru_hidden,
            c.scorer_hidden,
            c.ln_bias,
            c.proj_bias,
        ),
        ArchitectureConfig::PointwiseV2(c) | ArchitectureConfig::Calibrated(c) => trunk_count(
            c.d_in,
            c.pool_rank,
            c.proj_dim,
            c.gru_layers,
            c.gru_hidden,
            c.scorer_hidden,
            c.ln_bias,
            c.proj_bias,
        ),
        ArchitectureConfig::PointwiseV1(c) => c.steps * c.d_in * c.hidden + c.hidden + c.hidden + 1,
        ArchitectureConfig::Linear(c) => c.steps * c.d_in + 1,
    }
}

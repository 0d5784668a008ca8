use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SignalMode {
    /// Shared per-pair offset plus a small antisymmetric signal.
    Relational,
    /// Signal without the shared offset: readable from one response.
    Absolute,
    /// No planted signal.
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_pairs: usize,
    pub d: usize,
    /// Padded sequence length.
    pub seq_len: usize,
    pub steps: usize,
    pub mode: SignalMode,
    /// Half-strength of the planted signal along `u`.
    pub delta: f64,
    pub sigma_base: f64,
    pub sigma_noise: f64,
    /// Trailing tokens that carry the offset and signal.
    pub response_span: usize,
    /// Scale offset and signal by `t / T` at loop step `t` (1-based).
    pub temporal_ramp: bool,
    pub label_noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_pairs: 2000,
            d: 64,
            seq_len: 32,
            steps: 4,
            mode: SignalMode::Relational,
            delta: 0.5,
            sigma_base: 5.0,
            sigma_noise: 1.0,
            response_span: 16,
            temporal_ramp: false,
            label_noise_rate: 0.0,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d == 0 || self.seq_len == 0 || self.steps == 0 {
            return bad("d, seq_len and steps must be positive".into());
        }
        if self.steps > u16::MAX as usize {
            return bad(format!("steps {} too large", self.steps));
        }
        if self.response_span == 0 || self.response_span > self.seq_len {
            return bad(format!("response_span must be in 1..={}, got {}", self.seq_len, self.response_span));
        }
        for (name, v) in [("delta", self.delta), ("sigma_base", self.sigma_base), ("sigma_noise", self.sigma_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(0.0..0.5).contains(&self.label_noise_rate) {
            return bad(format!("label_noise_rate must be in [0, 0.5), got {}", self.label_noise_rate));
        }
        Ok(())
    }

    /// Effective signal and offset scales after applying the mode.
    pub fn effective_delta(&self) -> f64 {
        match self.mode {
            SignalMode::Null => 0.0,
            _ => self.delta,
        }
    }

    pub fn effective_sigma_base(&self) -> f64 {
        match self.mode {
            SignalMode::Absolute => 0.0,
            _ => self.sigma_base,
        }
    }

    /// Smallest token count a pair can have.
    pub fn min_tokens(&self) -> usize {
        self.seq_len.div_ceil(2).max(1)
    }

    /// Per-step signal weights.
    pub fn step_weights(&self) -> Vec<f64> {
        (1..=self.steps).map(|t| if self.temporal_ramp { t as f64 / self.steps as f64 } else { 1.0 }).collect()
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

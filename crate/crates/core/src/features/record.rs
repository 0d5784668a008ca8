use half::f16;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Chosen,
    Rejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Human,
    Synthetic,
}

impl LabelSource {
    pub fn code(self) -> u8 {
        match self {
            LabelSource::Human => 0,
            LabelSource::Synthetic => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(LabelSource::Human),
            1 => Ok(LabelSource::Synthetic),
            other => Err(Error::InvalidRecord(format!("unknown label source code {other}"))),
        }
    }
}

/// Checks that `mask` is left-padded (zeros then ones) and returns the
/// number of ones.
pub fn validate_mask(mask: &[u8]) -> Result<usize> {
    let first_one = mask.iter().position(|&m| m != 0).unwrap_or(mask.len());
    for (i, &m) in mask.iter().enumerate() {
        let ok = if i < first_one { m == 0 } else { m == 1 };
        if !ok {
            return Err(Error::InvalidRecord(format!("mask is not left-padded 0/1 at position {i} (value {m})")));
        }
    }
    Ok(mask.len() - first_one)
}

/// One response's hidden states for every loop step, `[T, L, d]` row-major,
/// plus its left-padded attention mask.
#[derive(Clone, Debug)]
pub struct LoopStateRecord {
    pub example_id: String,
    pub role: Role,
    steps: usize,
    seq_len: usize,
    dim: usize,
    token_count: usize,
    states: Vec<f16>,
    mask: Vec<u8>,
}

impl LoopStateRecord {
    pub fn new(
        example_id: impl Into<String>,
        role: Role,
        steps: usize,
        dim: usize,
        states: Vec<f16>,
        mask: Vec<u8>,
    ) -> Result<Self> {
        let seq_len = mask.len();
        if steps == 0 {
            return Err(Error::InvalidRecord("record needs at least one loop step".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidRecord("hidden size must be positive".into()));
        }
        if states.len() != steps * seq_len * dim {
            return Err(Error::shape("record states", steps * seq_len * dim, states.len()));
        }
        let token_count = validate_mask(&mask)?;
        if let Some(i) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord(format!("non-finite state value at flat index {i}")));
        }
        Ok(Self { example_id: example_id.into(), role, steps, seq_len, dim, token_count, states, mask })
    }

    /// Builds a record from `f32` values, rounding to half precision.
    pub fn from_f32(
        example_id: impl Into<String>,
        role: Role,
        steps: usize,
        dim: usize,
        states: &[f32],
        mask: Vec<u8>,
    ) -> Result<Self> {
        let states = states.iter().map(|&v| f16::from_f32(v)).collect();
        Self::new(example_id, role, steps, dim, states, mask)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Index of the first unmasked position.
    pub fn first_active(&self) -> usize {
        self.seq_len - self.token_count
    }

    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    pub fn states(&self) -> &[f16] {
        &self.states
    }

    /// `[L, d]` slice of loop step `t`.
    pub fn step(&self, t: usize) -> &[f16] {
        let n = self.seq_len * self.dim;
        &self.states[t * n..(t + 1) * n]
    }

    /// Unmasked rows of step `t` converted to `f32`, `token_count × d`.
    pub fn active_rows(&self, t: usize) -> Vec<f32> {
        let start = self.first_active() * self.dim;
        self.step(t)[start..].iter().map(|v| v.to_f32()).collect()
    }

    /// True when both records carry identical bits (including masked slots).
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.example_id == other.example_id
            && self.role == other.role
            && self.steps == other.steps
            && self.dim == other.dim
            && self.mask == other.mask
            && self.states.iter().map(|v| v.to_bits()).eq(other.states.iter().map(|v| v.to_bits()))
    }
}

/// Fills `target_steps` slots from the steps an early-exiting model actually
/// produced by repeating the last one. Returns the flat states and the true
/// step count.
pub fn fill_early_exit(produced: &[Vec<f16>], target_steps: usize) -> Result<(Vec<f16>, usize)> {
    let last = produced.last().ok_or_else(|| Error::InvalidRecord("no loop steps produced".into()))?;
    if produced.len() > target_steps {
        return Err(Error::InvalidRecord(format!(
            "{} loop steps produced but only {target_steps} slots",
            produced.len()
        )));
    }
    if let Some(bad) = produced.iter().find(|s| s.len() != last.len()) {
        return Err(Error::shape("loop step size", last.len(), bad.len()));
    }
    let mut out = Vec::with_capacity(target_steps * last.len());
    for s in produced {
        out.extend_from_slice(s);
    }
    for _ in produced.len()..target_steps {
        out.extend_from_slice(last);
    }
    Ok((out, produced.len()))
}

/// A chosen and a rejected response to the same prompt.
#[derive(Clone, Debug)]
pub struct PreferencePair {
    pub prompt_id: String,
    pub chosen: LoopStateRecord,
    pub rejected: LoopStateRecord,
    pub label_source: LabelSource,
}

impl PreferencePair {
    pub fn new(
        prompt_id: impl Into<String>,
        mut chosen: LoopStateRecord,
        mut rejected: LoopStateRecord,
        label_source: LabelSource,
    ) -> Result<Self> {
        let prompt_id = prompt_id.into();
        if chosen.steps != rejected.steps || chosen.dim != rejected.dim || chosen.seq_len != rejected.seq_len {
            return Err(Error::InvalidRecord(format!(
                "pair {prompt_id}: chosen is [{}, {}, {}] but rejected is [{}, {}, {}]",
                chosen.steps, chosen.seq_len, chosen.dim, rejected.steps, rejected.seq_len, rejected.dim
            )));
        }
        chosen.role = Role::Chosen;
        rejected.role = Role::Rejected;
        Ok(Self { prompt_id, chosen, rejected, label_source })
    }

    pub fn steps(&self) -> usize {
        self.chosen.steps
    }

    pub fn dim(&self) -> usize {
        self.chosen.dim
    }

    pub fn seq_len(&self) -> usize {
        self.chosen.seq_len
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        self.prompt_id == other.prompt_id
            && self.label_source == other.label_source
            && self.chosen.bits_eq(&other.chosen)
            && self.rejected.bits_eq(&other.rejected)
    }
}

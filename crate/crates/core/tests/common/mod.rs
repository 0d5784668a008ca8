#![allow(dead_code)]

use looplab::evaluators::{Evaluator, RecordInput};
use looplab::features::{LabelSource, LoopStateRecord, PreferencePair, Role};
use looplab::nn::{GradTarget, Mode, ParamTensor, Parameterized, Real};
use looplab::rng::{stream_id, SeededRng};
use rand::Rng;
use rand_distr::StandardNormal;

/// Random record with `tokens` active positions.
pub fn random_record(
    rng: &mut impl Rng,
    id: &str,
    steps: usize,
    len: usize,
    dim: usize,
    tokens: usize,
) -> LoopStateRecord {
    let mut states = vec![0f32; steps * len * dim];
    for t in 0..steps {
        for pos in len - tokens..len {
            for k in 0..dim {
                states[(t * len + pos) * dim + k] = rng.sample::<f32, _>(StandardNormal);
            }
        }
    }
    let mut mask = vec![0u8; len];
    mask[len - tokens..].fill(1);
    LoopStateRecord::from_f32(id, Role::Chosen, steps, dim, &states, mask).unwrap()
}

pub fn random_pair(rng: &mut impl Rng, i: usize, steps: usize, len: usize, dim: usize) -> PreferencePair {
    let id = format!("p{i}");
    let ta = rng.random_range(1..=len);
    let tb = rng.random_range(1..=len);
    let a = random_record(rng, &id, steps, len, dim, ta);
    let b = random_record(rng, &id, steps, len, dim, tb);
    PreferencePair::new(id, a, b, LabelSource::Synthetic).unwrap()
}

/// Perturbs every masked position of a record.
pub fn scramble_padding(r: &LoopStateRecord, value: f32) -> LoopStateRecord {
    let (t, l, d) = (r.steps(), r.seq_len(), r.dim());
    let mut states: Vec<f32> = r.states().iter().map(|v| v.to_f32()).collect();
    for s in 0..t {
        for pos in 0..r.first_active() {
            for k in 0..d {
                states[(s * l + pos) * d + k] = value + k as f32;
            }
        }
    }
    LoopStateRecord::from_f32(r.example_id.clone(), r.role, t, d, &states, r.mask().to_vec()).unwrap()
}

/// Gradient-check adapter scoring a fixed pair. Training mode reseeds
/// dropout on every call so the mask is identical across evaluations.
pub struct PairTarget<S: Real> {
    pub model: Evaluator<S>,
    pub a: RecordInput<S>,
    pub b: RecordInput<S>,
    pub dropout_seed: Option<u64>,
}

fn with_mode<T>(seed: Option<u64>, f: impl FnOnce(&mut Mode<'_>) -> T) -> T {
    match seed {
        Some(s) => {
            let mut rng: SeededRng = stream_id(s, 99);
            f(&mut Mode::Train(&mut rng))
        }
        None => f(&mut Mode::Eval),
    }
}

impl<S: Real> GradTarget<S> for PairTarget<S> {
    fn num_tensors(&self) -> usize {
        self.model.params().len()
    }

    fn tensor_mut(&mut self, index: usize) -> &mut ParamTensor<S> {
        self.model.params_mut().swap_remove(index)
    }

    fn value(&mut self) -> looplab::Result<S> {
        let (m, a, b) = (&self.model, &self.a, &self.b);
        with_mode(self.dropout_seed, |mode| m.score_pair(a, b, mode))
    }

    fn value_and_grad(&mut self) -> looplab::Result<S> {
        self.model.zero_grad();
        let (m, a, b) = (&self.model, &self.a, &self.b);
        let (s, cache) = with_mode(self.dropout_seed, |mode| m.forward_pair(a, b, mode))?;
        self.model.backward_pair(&cache, S::one());
        Ok(s)
    }
}

/// Gradient-check adapter for single-record evaluators.
pub struct PointTarget<S: Real> {
    pub model: Evaluator<S>,
    pub x: RecordInput<S>,
    pub dropout_seed: Option<u64>,
}

impl<S: Real> GradTarget<S> for PointTarget<S> {
    fn num_tensors(&self) -> usize {
        self.model.params().len()
    }

    fn tensor_mut(&mut self, index: usize) -> &mut ParamTensor<S> {
        self.model.params_mut().swap_remove(index)
    }

    fn value(&mut self) -> looplab::Result<S> {
        let (m, x) = (&self.model, &self.x);
        with_mode(self.dropout_seed, |mode| m.score_record(x, mode))
    }

    fn value_and_grad(&mut self) -> looplab::Result<S> {
        self.model.zero_grad();
        let (m, x) = (&self.model, &self.x);
        let (s, cache) = with_mode(self.dropout_seed, |mode| m.forward_record(x, mode))?;
        self.model.backward_record(&cache, S::one());
        Ok(s)
    }
}

// ---- naive f64 reference implementations -------------------------------

pub fn values(model: &Evaluator<f32>, name: &str) -> Vec<f64> {
    model
        .params()
        .into_iter()
        .find(|p| p.name() == name)
        .unwrap_or_else(|| panic!("no tensor {name}"))
        .values()
        .iter()
        .map(|&v| v as f64)
        .collect()
}

pub fn has(model: &Evaluator<f32>, name: &str) -> bool {
    model.params().iter().any(|p| p.name() == name)
}

pub fn naive_pool(rows: &[Vec<f64>], keys: &[f64], query: &[f64], d: usize, r: usize) -> Vec<f64> {
    let logits: Vec<f64> = rows
        .iter()
        .map(|h| (0..r).map(|j| (0..d).map(|i| h[i] * keys[i * r + j]).sum::<f64>() * query[j]).sum())
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    (0..d).map(|i| rows.iter().zip(&e).map(|(h, w)| h[i] * w / z).sum()).collect()
}

pub fn naive_ln(x: &[f64], gain: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = (var + 1e-5).sqrt();
    (0..x.len()).map(|i| (x[i] - mean) / sd * gain[i] + bias.map_or(0.0, |b| b[i])).collect()
}

/// `y_j = Σ_i x_i W[i, j] + b_j` with `W` stored `[in, out]`.
pub fn naive_linear(x: &[f64], w: &[f64], b: Option<&[f64]>, out: usize) -> Vec<f64> {
    (0..out).map(|j| (0..x.len()).map(|i| x[i] * w[i * out + j]).sum::<f64>() + b.map_or(0.0, |b| b[j])).collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One fully gated GRU cell, weights `[3h, in]` in r, z, n order.
pub fn naive_gru_cell(x: &[f64], h: &[f64], w_ih: &[f64], w_hh: &[f64], b_ih: &[f64], b_hh: &[f64]) -> Vec<f64> {
    let hd = h.len();
    let gi = |row: usize| (0..x.len()).map(|k| w_ih[row * x.len() + k] * x[k]).sum::<f64>() + b_ih[row];
    let gh = |row: usize| (0..hd).map(|k| w_hh[row * hd + k] * h[k]).sum::<f64>() + b_hh[row];
    (0..hd)
        .map(|j| {
            let r = sig(gi(j) + gh(j));
            let z = sig(gi(hd + j) + gh(hd + j));
            let n = (gi(2 * hd + j) + r * gh(2 * hd + j)).tanh();
            (1.0 - z) * n + z * h[j]
        })
        .collect()
}

pub fn naive_gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Trunk oracle: optional LN, projection, stacked GRU, skip, scorer (eval mode).
pub fn naive_trunk(model: &Evaluator<f32>, steps: &[Vec<f64>], normalize: bool) -> f64 {
    let gain = values(model, "norm.gain");
    let bias = has(model, "norm.bias").then(|| values(model, "norm.bias"));
    let pw = values(model, "proj.weight");
    let pb = has(model, "proj.bias").then(|| values(model, "proj.bias"));
    let proj_dim = pw.len() / gain.len();
    let projected: Vec<Vec<f64>> = steps
        .iter()
        .map(|x| {
            let n = if normalize { naive_ln(x, &gain, bias.as_deref()) } else { x.clone() };
            naive_linear(&n, &pw, pb.as_deref(), proj_dim)
        })
        .collect();
    let mut seq = projected.clone();
    let mut layer = 0;
    while has(model, &format!("gru.l{layer}.w_ih")) {
        let p = |s: &str| values(model, &format!("gru.l{layer}.{s}"));
        let (w_ih, w_hh, b_ih, b_hh) = (p("w_ih"), p("w_hh"), p("b_ih"), p("b_hh"));
        let hd = b_ih.len() / 3;
        let mut h = vec![0.0; hd];
        let mut out = Vec::new();
        for x in &seq {
            h = naive_gru_cell(x, &h, &w_ih, &w_hh, &b_ih, &b_hh);
            out.push(h.clone());
        }
        seq = out;
        layer += 1;
    }
    let mut combined = seq.last().unwrap().clone();
    combined.extend_from_slice(projected.last().unwrap());
    let ln = naive_ln(&combined, &values(model, "scorer.norm.gain"), Some(&values(model, "scorer.norm.bias")));
    let fcw = values(model, "scorer.fc.weight");
    let hidden = fcw.len() / combined.len();
    let pre = naive_linear(&ln, &fcw, Some(&values(model, "scorer.fc.bias")), hidden);
    let act: Vec<f64> = pre.iter().map(|&v| naive_gelu(v)).collect();
    naive_linear(&act, &values(model, "scorer.out.weight"), Some(&values(model, "scorer.out.bias")), 1)[0]
}

pub fn active_rows_f64(r: &LoopStateRecord, t: usize) -> Vec<Vec<f64>> {
    r.active_rows(t).chunks(r.dim()).map(|c| c.iter().map(|&v| v as f64).collect()).collect()
}

pub fn naive_pairwise(model: &Evaluator<f32>, a: &LoopStateRecord, b: &LoopStateRecord, pre_diff: bool) -> f64 {
    let keys = values(model, "pool.keys");
    let query = values(model, "pool.query");
    let (d, r) = (a.dim(), query.len());
    let gain = values(model, "norm.gain");
    let steps: Vec<Vec<f64>> = (0..a.steps())
        .map(|t| {
            let pa = naive_pool(&active_rows_f64(a, t), &keys, &query, d, r);
            let pb = naive_pool(&active_rows_f64(b, t), &keys, &query, d, r);
            if pre_diff {
                let na = naive_ln(&pa, &gain, None);
                let nb = naive_ln(&pb, &gain, None);
                na.iter().zip(&nb).map(|(x, y)| x - y).collect()
            } else {
                pa.iter().zip(&pb).map(|(x, y)| x - y).collect()
            }
        })
        .collect();
    naive_trunk(model, &steps, !pre_diff)
}

pub fn naive_v2(model: &Evaluator<f32>, x: &LoopStateRecord) -> f64 {
    let keys = values(model, "pool.keys");
    let query = values(model, "pool.query");
    let steps: Vec<Vec<f64>> =
        (0..x.steps()).map(|t| naive_pool(&active_rows_f64(x, t), &keys, &query, x.dim(), query.len())).collect();
    naive_trunk(model, &steps, true)
}

pub fn naive_mean_concat(x: &LoopStateRecord) -> Vec<f64> {
    let mut out = Vec::new();
    for t in 0..x.steps() {
        let rows = active_rows_f64(x, t);
        for k in 0..x.dim() {
            out.push(rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64);
        }
    }
    out
}
pub mod grad;

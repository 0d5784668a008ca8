//! Gradient-check cases shared by the gradient and acceptance suites.

use looplab::evaluators::{
    ArchitectureConfig, Evaluator, LinearConfig, PairwiseConfig, PointwiseV1Config, PointwiseV2Config, RecordInput,
    Scorer,
};
use looplab::nn::{
    dropout, gelu, gelu_grad, grad_check, grad_check_against, masked_softmax, softmax_backward, AttentionPool,
    GradCheckConfig, GradCheckReport, GradTarget, Gru, LayerNorm, Linear, Mode, ParamTensor, Parameterized, Real,
};
use looplab::rng::{stream_id, SeededRng};
use looplab::training::{calibrated_loss, pairwise_loss, pointwise_ranking_loss};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{random_pair, PairTarget, PointTarget};

pub fn small_pairwise() -> PairwiseConfig {
    PairwiseConfig {
        d_in: 8,
        pool_rank: 3,
        proj_dim: 5,
        gru_layers: 2,
        gru_hidden: 4,
        scorer_hidden: 6,
        ..Default::default()
    }
}

pub fn small_v2() -> PointwiseV2Config {
    PointwiseV2Config {
        d_in: 8,
        pool_rank: 3,
        proj_dim: 5,
        gru_layers: 2,
        gru_hidden: 4,
        scorer_hidden: 6,
        ..Default::default()
    }
}

pub fn all_small_configs() -> Vec<ArchitectureConfig> {
    vec![
        ArchitectureConfig::Pairwise(small_pairwise()),
        ArchitectureConfig::Pairwise(PairwiseConfig { pre_diff_norm: true, proj_bias: true, ..small_pairwise() }),
        ArchitectureConfig::Pairwise(PairwiseConfig { ln_bias: true, ..small_pairwise() }),
        ArchitectureConfig::PointwiseV2(small_v2()),
        ArchitectureConfig::Calibrated(small_v2()),
        ArchitectureConfig::PointwiseV1(PointwiseV1Config { d_in: 8, steps: 3, hidden: 7 }),
        ArchitectureConfig::Linear(LinearConfig { d_in: 8, steps: 3 }),
    ]
}

/// Names and errors of the tensors over tolerance.
pub fn failures(report: &GradCheckReport) -> Vec<(String, f64)> {
    report
        .per_parameter
        .iter()
        .filter(|t| t.max_rel_error > report.tolerance)
        .map(|t| (t.name.clone(), t.max_rel_error))
        .collect()
}

/// Full-model check on a random pair. `f64_mode` differences an `f64`
/// model; otherwise the `f32` backward pass is judged against central
/// differences of its `f64` twin.
pub fn evaluator_report(cfg: &ArchitectureConfig, seed: u64, f64_mode: bool) -> GradCheckReport {
    let mut rng = stream_id(seed, 0);
    let steps = cfg.fixed_steps().unwrap_or(4);
    let p = random_pair(&mut rng, 0, steps, 6, 8);
    let dropout_seed = Some(seed);
    let model32 = Evaluator::<f32>::new(cfg, seed).unwrap();
    let model64 = model32.cast::<f64>();
    let a64 = RecordInput::<f64>::from_record(&p.chosen).unwrap();
    let b64 = RecordInput::<f64>::from_record(&p.rejected).unwrap();
    if f64_mode {
        let c = GradCheckConfig::f64_mode();
        return if cfg.is_pairwise() {
            grad_check(cfg.tag(), &mut PairTarget { model: model64, a: a64, b: b64, dropout_seed }, &c).unwrap()
        } else {
            grad_check(cfg.tag(), &mut PointTarget { model: model64, x: a64, dropout_seed }, &c).unwrap()
        };
    }
    let a = RecordInput::<f32>::from_record(&p.chosen).unwrap();
    let b = RecordInput::<f32>::from_record(&p.rejected).unwrap();
    let c = GradCheckConfig::f32_reference();
    if cfg.is_pairwise() {
        let mut t = PairTarget { model: model32, a, b, dropout_seed };
        let mut r = PairTarget { model: model64, a: a64, b: b64, dropout_seed };
        grad_check_against(cfg.tag(), &mut t, &mut r, &c).unwrap()
    } else {
        let mut t = PointTarget { model: model32, x: a, dropout_seed };
        let mut r = PointTarget { model: model64, x: a64, dropout_seed };
        grad_check_against(cfg.tag(), &mut t, &mut r, &c).unwrap()
    }
}

type Run<S, L> = fn(&mut L, &mut [ParamTensor<S>], &[S], bool) -> looplab::Result<S>;

/// A layer plus explicit input tensors, reduced to a scalar by a fixed
/// random projection of the output.
pub struct LayerTarget<S: Real, L> {
    layer: L,
    inputs: Vec<ParamTensor<S>>,
    probe: Vec<S>,
    run: Run<S, L>,
}

impl<S: Real, L: Parameterized<S>> GradTarget<S> for LayerTarget<S, L> {
    fn num_tensors(&self) -> usize {
        self.layer.params().len() + self.inputs.len()
    }

    fn tensor_mut(&mut self, index: usize) -> &mut ParamTensor<S> {
        let n = self.layer.params().len();
        if index < n {
            self.layer.params_mut().swap_remove(index)
        } else {
            &mut self.inputs[index - n]
        }
    }

    fn value(&mut self) -> looplab::Result<S> {
        (self.run)(&mut self.layer, &mut self.inputs, &self.probe, false)
    }

    fn value_and_grad(&mut self) -> looplab::Result<S> {
        self.layer.zero_grad();
        for t in &mut self.inputs {
            t.zero_grad();
        }
        (self.run)(&mut self.layer, &mut self.inputs, &self.probe, true)
    }
}

/// Parameter-free stand-in for activations and losses.
pub struct NoParams;

impl<S: Real> Parameterized<S> for NoParams {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        Vec::new()
    }
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn add_grad<S: Real>(t: &mut ParamTensor<S>, g: &[S]) {
    for (dst, src) in t.grad_mut().iter_mut().zip(g) {
        *dst += *src;
    }
}

/// Standard-normal values already rounded to `f32`, so the two precisions
/// see identical numbers.
fn normals(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| ((scale * rng.sample::<f64, _>(StandardNormal)) as f32) as f64).collect()
}

fn tensor<S: Real>(name: &str, shape: &[usize], v: &[f64]) -> ParamTensor<S> {
    ParamTensor::from_values(name, shape, v.iter().map(|x| S::lit(*x)).collect()).unwrap()
}

fn lits<S: Real>(v: &[f64]) -> Vec<S> {
    v.iter().map(|x| S::lit(*x)).collect()
}

fn round_params<S: Real, L: Parameterized<S>>(layer: &mut L) {
    for p in layer.params_mut() {
        for v in p.values_mut() {
            *v = S::lit(v.as_f64() as f32 as f64);
        }
    }
}

fn boxed<S: Real, L: Parameterized<S> + 'static>(
    mut layer: L,
    inputs: Vec<ParamTensor<S>>,
    probe: Vec<S>,
    run: Run<S, L>,
) -> Box<dyn GradTarget<S>> {
    round_params(&mut layer);
    Box::new(LayerTarget { layer, inputs, probe, run })
}

/// Every layer and loss as a gradient-check target.
pub fn layer_cases<S: Real>(seed: u64) -> Vec<(&'static str, Box<dyn GradTarget<S>>)> {
    let mut rng = stream_id(seed, 7);
    let mut cases: Vec<(&'static str, Box<dyn GradTarget<S>>)> = Vec::new();

    for (name, bias) in [("linear", true), ("linear_no_bias", false)] {
        let mut lin = Linear::<S>::zeros("lin", 5, 4, bias);
        lin.init_uniform(&mut rng);
        let x = tensor("x", &[5], &normals(&mut rng, 5, 1.0));
        let probe = lits(&normals(&mut rng, 4, 1.0));
        cases.push((
            name,
            boxed(lin, vec![x], probe, |l, ins, probe, grad| {
                let y = l.forward(ins[0].values())?;
                if grad {
                    let x = ins[0].values().to_vec();
                    let gx = l.backward(&x, probe);
                    add_grad(&mut ins[0], &gx);
                }
                Ok(dot(&y, probe))
            }),
        ));
    }

    for (name, bias) in [("layernorm", true), ("layernorm_no_bias", false)] {
        let mut ln = LayerNorm::<S>::new("ln", 6, bias);
        let g = normals(&mut rng, 6, 0.3);
        for (v, d) in ln.params_mut()[0].values_mut().iter_mut().zip(&g) {
            *v += S::lit(*d);
        }
        if bias {
            let b = normals(&mut rng, 6, 0.3);
            ln.params_mut()[1].set_values(&lits(&b)).unwrap();
        }
        let x = tensor("x", &[6], &normals(&mut rng, 6, 2.0));
        let probe = lits(&normals(&mut rng, 6, 1.0));
        cases.push((
            name,
            boxed(ln, vec![x], probe, |l, ins, probe, grad| {
                let (y, cache) = l.forward(ins[0].values())?;
                if grad {
                    let gx = l.backward(&cache, probe);
                    add_grad(&mut ins[0], &gx);
                }
                Ok(dot(&y, probe))
            }),
        ));
    }

    {
        let mut gru = Gru::<S>::zeros("gru", 3, 3, 2);
        gru.init_uniform(&mut rng);
        let xs: Vec<ParamTensor<S>> =
            (0..4).map(|t| tensor(&format!("x{t}"), &[3], &normals(&mut rng, 3, 1.0))).collect();
        let probe = lits(&normals(&mut rng, 3, 1.0));
        cases.push((
            "gru",
            boxed(gru, xs, probe, |g, ins, probe, grad| {
                let seq: Vec<Vec<S>> = ins.iter().map(|t| t.values().to_vec()).collect();
                let (h, cache) = g.forward(&seq)?;
                if grad {
                    let gx = g.backward(&cache, probe);
                    for (t, gt) in ins.iter_mut().zip(&gx) {
                        add_grad(t, gt);
                    }
                }
                Ok(dot(&h, probe))
            }),
        ));
    }

    {
        let mut pool = AttentionPool::<S>::zeros("pool", 6, 2);
        pool.init_normal(&mut rng, 0.5);
        let rows = tensor("rows", &[4, 6], &normals(&mut rng, 24, 1.0));
        let probe = lits(&normals(&mut rng, 6, 1.0));
        cases.push((
            "attention_pool",
            boxed(pool, vec![rows], probe, |p, ins, probe, grad| {
                let rows = ins[0].values().to_vec();
                let (y, cache) = p.forward_rows(&rows)?;
                if grad {
                    let mut g = vec![S::zero(); rows.len()];
                    p.backward_rows(&rows, &cache, probe, Some(&mut g));
                    add_grad(&mut ins[0], &g);
                }
                Ok(dot(&y, probe))
            }),
        ));
    }

    {
        let logits = tensor("logits", &[5], &normals(&mut rng, 5, 1.5));
        let probe = lits(&normals(&mut rng, 5, 1.0));
        cases.push((
            "masked_softmax",
            boxed(NoParams, vec![logits], probe, |_, ins, probe, grad| {
                let mask = [0u8, 1, 1, 1, 1];
                let p = masked_softmax(ins[0].values(), &mask)?;
                if grad {
                    let g = softmax_backward(&p, probe);
                    add_grad(&mut ins[0], &g);
                }
                Ok(dot(&p, probe))
            }),
        ));
    }

    {
        let x = tensor("x", &[7], &normals(&mut rng, 7, 2.0));
        let probe = lits(&normals(&mut rng, 7, 1.0));
        cases.push((
            "gelu",
            boxed(NoParams, vec![x], probe, |_, ins, probe, grad| {
                let y: Vec<S> = ins[0].values().iter().map(|v| gelu(*v)).collect();
                if grad {
                    let g: Vec<S> = ins[0].values().iter().zip(probe).map(|(v, p)| gelu_grad(*v) * *p).collect();
                    add_grad(&mut ins[0], &g);
                }
                Ok(dot(&y, probe))
            }),
        ));
    }

    {
        let x = tensor("x", &[8], &normals(&mut rng, 8, 1.0));
        let probe = lits(&normals(&mut rng, 8, 1.0));
        cases.push((
            "dropout",
            boxed(NoParams, vec![x], probe, |_, ins, probe, grad| {
                let mut r: SeededRng = stream_id(5, 5);
                let (y, mask) = dropout(ins[0].values(), 0.3, true, Some(&mut r));
                if grad {
                    let g = mask.apply(probe);
                    add_grad(&mut ins[0], &g);
                }
                Ok(dot(&y, probe))
            }),
        ));
    }

    {
        let mut scorer = Scorer::<S>::zeros("scorer", 6, 5, 0.2);
        scorer.init(&mut rng);
        let x = tensor("x", &[6], &normals(&mut rng, 6, 1.0));
        cases.push((
            "scorer",
            boxed(scorer, vec![x], Vec::new(), |s, ins, _, grad| {
                let mut r: SeededRng = stream_id(6, 6);
                let (y, cache) = s.forward(ins[0].values(), &mut Mode::Train(&mut r))?;
                if grad {
                    let g = s.backward(&cache, S::one());
                    add_grad(&mut ins[0], &g);
                }
                Ok(y)
            }),
        ));
    }

    for (name, target) in [("pairwise_loss_pos", 1.0), ("pairwise_loss_neg", -1.0)] {
        let mut v = normals(&mut rng, 1, 2.0);
        v.push(target);
        cases.push((
            name,
            boxed(NoParams, vec![tensor("score", &[1], &v[..1])], lits(&v[1..]), |_, ins, t, grad| {
                let (l, g) = pairwise_loss(ins[0].values()[0], t[0], S::lit(1e-2));
                if grad {
                    ins[0].grad_mut()[0] += g;
                }
                Ok(l)
            }),
        ));
    }

    // the probe slot selects the loss: 0 ranking, 1 calibrated
    for (name, which) in [("ranking_loss", 0.0), ("calibrated_loss", 1.0)] {
        let scores = tensor("scores", &[2], &normals(&mut rng, 2, 1.5));
        cases.push((
            name,
            boxed(NoParams, vec![scores], lits(&[which]), |_, ins, sel, grad| {
                let (c, r) = (ins[0].values()[0], ins[0].values()[1]);
                let (l, gc, gr) =
                    if sel[0] == S::zero() { pointwise_ranking_loss(c, r) } else { calibrated_loss(c, r) };
                if grad {
                    ins[0].grad_mut()[0] += gc;
                    ins[0].grad_mut()[1] += gr;
                }
                Ok(l)
            }),
        ));
    }

    cases
}

/// Every layer and loss checked at one seed, in either precision mode.
pub fn layer_reports(seed: u64, f64_mode: bool) -> Vec<GradCheckReport> {
    let cases64 = layer_cases::<f64>(seed);
    if f64_mode {
        return cases64
            .into_iter()
            .map(|(name, mut t)| grad_check(name, &mut *t, &GradCheckConfig::f64_mode()).unwrap())
            .collect();
    }
    layer_cases::<f32>(seed)
        .into_iter()
        .zip(cases64)
        .map(|((name, mut t), (_, mut r))| {
            grad_check_against(name, &mut *t, &mut *r, &GradCheckConfig::f32_reference()).unwrap()
        })
        .collect()
}

use std::sync::Arc;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::config::{LossKind, TrainConfig};
use super::losses::{calibrated_loss, pairwise_loss, pointwise_ranking_loss};
use super::metrics::{deflated_accuracy, fixed_order_eval, EpochMetrics};
use super::swap::swap_batch;
use crate::evaluators::{ArchitectureConfig, Evaluator, RecordInput};
use crate::features::{LoopStateRecord, PairSource, PreferencePair};
use crate::nn::{Mode, Parameterized};
use crate::optim::{clip_grad_norm, AdamW, AdamWConfig, LrSchedule};
use crate::rng::{stream, SeededRng, Stream};
use crate::{Error, Result};

/// Batches are split into this many fixed shards whose gradients are summed
/// in shard order, so results do not depend on the machine's core count.
const SHARDS: usize = 8;

struct Item<'a> {
    first: &'a LoopStateRecord,
    second: &'a LoopStateRecord,
    target: f64,
    dropout_seed: u64,
    prompt_id: &'a str,
}

struct ShardOut {
    grads: Vec<Vec<f32>>,
    loss_sum: f64,
    scores: Vec<f64>,
    targets: Vec<f64>,
}

/// Epoch-at-a-time trainer holding the model, optimizer state and the
/// shuffle, swap and dropout streams.
pub struct Trainer {
    config: TrainConfig,
    model: Evaluator<f32>,
    optimizer: AdamW<f32>,
    schedule: Option<LrSchedule>,
    step: u64,
    epoch: usize,
    shuffle_rng: SeededRng,
    swap_rng: SeededRng,
    dropout_rng: SeededRng,
}

impl Trainer {
    /// Fresh model initialized from `config.seed`.
    pub fn new(config: &TrainConfig, arch: &ArchitectureConfig, train_pairs: usize) -> Result<Self> {
        let arch = arch.clone().with_dropout(config.dropout_rate);
        let model = Evaluator::new(&arch, config.seed)?;
        Self::from_model(config, model, train_pairs)
    }

    pub fn from_model(config: &TrainConfig, model: Evaluator<f32>, train_pairs: usize) -> Result<Self> {
        config.validate()?;
        if config.loss.is_pairwise() != model.is_pairwise() {
            return Err(Error::Config(format!(
                "loss {:?} does not fit the {} architecture",
                config.loss,
                model.config().tag()
            )));
        }
        if train_pairs == 0 {
            return Err(Error::Empty("training split".into()));
        }
        let total = config.total_steps(train_pairs);
        let schedule = if total > 0 {
            Some(LrSchedule::new(total, config.warmup_steps, config.lr_max, config.lr_min)?)
        } else {
            None
        };
        let optimizer =
            AdamW::new(&model.params(), AdamWConfig { weight_decay: config.weight_decay, ..AdamWConfig::default() });
        Ok(Self {
            config: config.clone(),
            model,
            optimizer,
            schedule,
            step: 0,
            epoch: 0,
            shuffle_rng: stream(config.seed, Stream::Shuffle),
            swap_rng: stream(config.seed, Stream::Swap),
            dropout_rng: stream(config.seed, Stream::Dropout),
        })
    }

    pub fn model(&self) -> &Evaluator<f32> {
        &self.model
    }

    pub fn into_model(self) -> Evaluator<f32> {
        self.model
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.step
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    fn items<'a>(&mut self, batch: &[&'a PreferencePair]) -> Vec<Item<'a>> {
        let c = &self.config;
        match c.loss {
            LossKind::PairwiseSwap => swap_batch(batch.iter().copied(), &mut self.swap_rng, c.swap_prob)
                .into_iter()
                .zip(batch)
                .map(|(o, p)| Item {
                    first: o.first,
                    second: o.second,
                    target: o.target,
                    dropout_seed: self.dropout_rng.random(),
                    prompt_id: &p.prompt_id,
                })
                .collect(),
            _ => batch
                .iter()
                .map(|p| Item {
                    first: &p.chosen,
                    second: &p.rejected,
                    target: 1.0,
                    dropout_seed: self.dropout_rng.random(),
                    prompt_id: &p.prompt_id,
                })
                .collect(),
        }
    }

    fn run_shard(&self, items: &[Item<'_>], scale: f64, batch_index: usize) -> Result<ShardOut> {
        let mut model = self.model.clone();
        for p in model.params_mut() {
            p.zero_grad();
        }
        let kind = self.config.loss;
        let l2 = match kind {
            LossKind::PairwiseSwap => self.config.l2_score_coeff,
            _ => 0.0,
        };
        let mut out = ShardOut {
            grads: Vec::new(),
            loss_sum: 0.0,
            scores: Vec::with_capacity(items.len()),
            targets: Vec::with_capacity(items.len()),
        };
        for it in items {
            let a = RecordInput::<f32>::from_record(it.first)?;
            let b = RecordInput::<f32>::from_record(it.second)?;
            let mut rng = SeededRng::seed_from_u64(it.dropout_seed);
            let mut mode = Mode::Train(&mut rng);
            let non_finite = |detail: String| Error::NonFiniteLoss {
                epoch: self.epoch + 1,
                batch: batch_index,
                detail: format!("pair {}: {detail}", it.prompt_id),
            };
            if kind.is_pairwise() {
                let (s, cache) = model.forward_pair(&a, &b, &mut mode)?;
                let s = s as f64;
                let (loss, g) = pairwise_loss(s, it.target, l2);
                if !loss.is_finite() {
                    return Err(non_finite(format!("score {s}, loss {loss}")));
                }
                model.backward_pair(&cache, (g * scale) as f32);
                out.loss_sum += loss;
                out.scores.push(s);
            } else {
                let (sc, cc) = model.forward_record(&a, &mut mode)?;
                let (sr, cr) = model.forward_record(&b, &mut mode)?;
                let (sc, sr) = (sc as f64, sr as f64);
                let (loss, gc, gr) = match kind {
                    LossKind::Calibrated => calibrated_loss(sc, sr),
                    _ => pointwise_ranking_loss(sc, sr),
                };
                if !loss.is_finite() {
                    return Err(non_finite(format!("scores {sc} / {sr}, loss {loss}")));
                }
                model.backward_record(&cc, (gc * scale) as f32);
                model.backward_record(&cr, (gr * scale) as f32);
                out.loss_sum += loss;
                out.scores.push(sc - sr);
            }
            out.targets.push(it.target);
        }
        out.grads = model.params().iter().map(|p| p.grad().to_vec()).collect();
        Ok(out)
    }

    /// Forward and backward over one batch; gradients accumulate into the
    /// model. Returns `(loss_sum, scores, targets)`.
    fn accumulate(&mut self, batch: &[&PreferencePair], batch_index: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let items = self.items(batch);
        let scale = 1.0 / (items.len() * self.config.grad_accum_steps) as f64;
        let per = items.len().div_ceil(SHARDS).max(1);
        let this = &*self;
        let outs: Vec<Result<ShardOut>> = thread::scope(|s| {
            let handles: Vec<_> =
                items.chunks(per).map(|shard| s.spawn(move || this.run_shard(shard, scale, batch_index))).collect();
            handles.into_iter().map(|h| h.join().expect("training shard panicked")).collect()
        });
        let (mut loss, mut scores, mut targets) = (0.0, Vec::new(), Vec::new());
        let mut params = self.model.params_mut();
        for out in outs {
            let out = out?;
            for (p, g) in params.iter_mut().zip(&out.grads) {
                for (dst, src) in p.grad_mut().iter_mut().zip(g) {
                    *dst += *src;
                }
            }
            loss += out.loss_sum;
            scores.extend(out.scores);
            targets.extend(out.targets);
        }
        Ok((loss, scores, targets))
    }

    fn optimizer_step(&mut self) -> Result<f64> {
        let schedule = self.schedule.as_ref().ok_or_else(|| Error::Config("no optimizer steps scheduled".into()))?;
        let lr = schedule.lr(self.step + 1);
        let mut params = self.model.params_mut();
        clip_grad_norm(&mut params, self.config.clip_norm)?;
        self.optimizer.step(&mut params, lr)?;
        for p in params.iter_mut() {
            p.zero_grad();
        }
        self.step += 1;
        Ok(lr)
    }

    /// One pass over `train` followed by the fixed-order evaluations.
    pub fn run_epoch(&mut self, train: &dyn PairSource, eval: Option<&dyn PairSource>) -> Result<EpochMetrics> {
        let bs = self.config.batch_size;
        let mut chunk_order: Vec<usize> = (0..train.num_chunks()).collect();
        chunk_order.shuffle(&mut self.shuffle_rng);

        let mut pending: Vec<(Arc<Vec<PreferencePair>>, usize)> = Vec::with_capacity(bs);
        let (mut loss_sum, mut scores, mut targets) = (0.0, Vec::new(), Vec::new());
        let (mut lr_first, mut lr_last) = (None, 0.0);
        let mut batch_index = 0;
        let mut since_step = 0;

        let mut flush =
            |this: &mut Self, pending: &mut Vec<(Arc<Vec<PreferencePair>>, usize)>, last: bool| -> Result<()> {
                if !pending.is_empty() {
                    let batch: Vec<&PreferencePair> = pending.iter().map(|(c, i)| &c[*i]).collect();
                    batch_index += 1;
                    let (l, s, t) = this.accumulate(&batch, batch_index)?;
                    loss_sum += l;
                    scores.extend(s);
                    targets.extend(t);
                    pending.clear();
                    since_step += 1;
                }
                if since_step > 0 && (since_step == this.config.grad_accum_steps || last) {
                    let lr = this.optimizer_step()?;
                    lr_first.get_or_insert(lr);
                    lr_last = lr;
                    since_step = 0;
                }
                Ok(())
            };

        for ci in chunk_order {
            let chunk = train.load_chunk(ci)?;
            let mut order: Vec<usize> = (0..chunk.len()).collect();
            order.shuffle(&mut self.shuffle_rng);
            for i in order {
                pending.push((Arc::clone(&chunk), i));
                if pending.len() == bs {
                    flush(self, &mut pending, false)?;
                }
            }
        }
        flush(self, &mut pending, true)?;
        self.epoch += 1;

        let train_report = fixed_order_eval(&self.model, train)?;
        let eval_report = eval.map(|e| fixed_order_eval(&self.model, e)).transpose()?;
        let metrics = EpochMetrics {
            epoch: self.epoch,
            mean_loss: loss_sum / scores.len() as f64,
            deflated_acc: deflated_accuracy(&scores, &targets)?,
            fixed_order_train_acc: train_report.accuracy,
            fixed_order_acc: eval_report.as_ref().map(|r| r.accuracy),
            lr_first: lr_first.unwrap_or(0.0),
            lr_last,
            optimizer_steps: self.step,
            train_stats: train_report.stats,
            eval_stats: eval_report.map(|r| r.stats),
        };
        log::info!(
            "epoch {}: loss {:.4}, deflated {:.3}, fixed-order train {:.3}{}",
            metrics.epoch,
            metrics.mean_loss,
            metrics.deflated_acc,
            metrics.fixed_order_train_acc,
            metrics.fixed_order_acc.map(|a| format!(", held-out {a:.3}")).unwrap_or_default()
        );
        Ok(metrics)
    }
}

/// Result of a full run.
pub struct TrainOutcome {
    /// The model before any update.
    pub initial: Evaluator<f32>,
    pub model: Evaluator<f32>,
    pub metrics: Vec<EpochMetrics>,
}

/// Runs `config.epochs` epochs, calling `on_epoch` after each with the
/// epoch's metrics and model. Zero epochs returns the initialization.
pub fn train(
    config: &TrainConfig,
    arch: &ArchitectureConfig,
    train_source: &dyn PairSource,
    eval_source: Option<&dyn PairSource>,
    mut on_epoch: impl FnMut(&EpochMetrics, &Evaluator<f32>) -> Result<()>,
) -> Result<TrainOutcome> {
    let (steps, dim, _) = train_source.geometry();
    if arch.d_in() != dim {
        return Err(Error::shape("feature dimension", arch.d_in(), dim));
    }
    if let Some(s) = arch.fixed_steps() {
        if s != steps {
            return Err(Error::shape("loop steps", s, steps));
        }
    }
    let mut trainer = Trainer::new(config, arch, train_source.total_pairs())?;
    let initial = trainer.model().clone();
    let mut metrics = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let m = trainer.run_epoch(train_source, eval_source)?;
        on_epoch(&m, trainer.model())?;
        metrics.push(m);
    }
    Ok(TrainOutcome { initial, model: trainer.into_model(), metrics })
}

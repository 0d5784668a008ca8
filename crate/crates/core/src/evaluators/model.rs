use super::config::ArchitectureConfig;
use super::input::RecordInput;
use super::linear_eval::{LinearCache, LinearEvaluator};
use super::pairwise::{PairwiseCache, PairwiseEvaluator};
use super::pointwise::{PointwiseV1, PointwiseV2, V1Cache, V2Cache};
use crate::features::LoopStateRecord;
use crate::nn::{Mode, ParamTensor, Parameterized, Real};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// Any evaluator architecture behind one type.
#[derive(Clone, Debug)]
pub enum Evaluator<S> {
    Pairwise(PairwiseEvaluator<S>),
    PointwiseV1(PointwiseV1<S>),
    PointwiseV2 { model: PointwiseV2<S>, calibrated: bool },
    Linear(LinearEvaluator<S>),
}

/// Saved activations of a single-record forward pass.
#[derive(Clone, Debug)]
pub enum PointCache<S> {
    V1(V1Cache<S>),
    V2(V2Cache<S>),
    Linear(LinearCache<S>),
}

impl<S: Real> Evaluator<S> {
    /// All parameters zero (LayerNorm gains one).
    pub fn zeros(config: &ArchitectureConfig) -> Result<Self> {
        config.validate()?;
        Ok(match config {
            ArchitectureConfig::Pairwise(c) => Evaluator::Pairwise(PairwiseEvaluator::zeros(c.clone())),
            ArchitectureConfig::PointwiseV1(c) => Evaluator::PointwiseV1(PointwiseV1::zeros(c.clone())),
            ArchitectureConfig::PointwiseV2(c) => {
                Evaluator::PointwiseV2 { model: PointwiseV2::zeros(c.clone()), calibrated: false }
            }
            ArchitectureConfig::Calibrated(c) => {
                Evaluator::PointwiseV2 { model: PointwiseV2::zeros(c.clone()), calibrated: true }
            }
            ArchitectureConfig::Linear(c) => Evaluator::Linear(LinearEvaluator::zeros(c.clone())),
        })
    }

    /// Randomly initialized from the seed's init stream.
    pub fn new(config: &ArchitectureConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut rng = stream(seed, Stream::Init);
        match &mut model {
            Evaluator::Pairwise(m) => m.init(&mut rng),
            Evaluator::PointwiseV1(m) => m.init(&mut rng),
            Evaluator::PointwiseV2 { model, .. } => model.init(&mut rng),
            Evaluator::Linear(m) => m.init(&mut rng),
        }
        Ok(model)
    }

    pub fn config(&self) -> ArchitectureConfig {
        match self {
            Evaluator::Pairwise(m) => ArchitectureConfig::Pairwise(m.config.clone()),
            Evaluator::PointwiseV1(m) => ArchitectureConfig::PointwiseV1(m.config.clone()),
            Evaluator::PointwiseV2 { model, calibrated: false } => {
                ArchitectureConfig::PointwiseV2(model.config.clone())
            }
            Evaluator::PointwiseV2 { model, calibrated: true } => ArchitectureConfig::Calibrated(model.config.clone()),
            Evaluator::Linear(m) => ArchitectureConfig::Linear(m.config.clone()),
        }
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, Evaluator::Pairwise(_))
    }

    fn not_pairwise(&self) -> Error {
        Error::Config(format!("{} is a pointwise evaluator; it scores one record at a time", self.config().tag()))
    }

    fn not_pointwise(&self) -> Error {
        Error::Config("the pairwise evaluator needs two records".into())
    }

    pub fn forward_pair(
        &self,
        a: &RecordInput<S>,
        b: &RecordInput<S>,
        mode: &mut Mode<'_>,
    ) -> Result<(S, PairwiseCache<S>)> {
        match self {
            Evaluator::Pairwise(m) => m.forward(a, b, mode),
            _ => Err(self.not_pairwise()),
        }
    }

    pub fn backward_pair(&mut self, cache: &PairwiseCache<S>, grad: S) {
        if let Evaluator::Pairwise(m) = self {
            m.backward(cache, grad);
        }
    }

    pub fn score_pair(&self, a: &RecordInput<S>, b: &RecordInput<S>, mode: &mut Mode<'_>) -> Result<S> {
        Ok(self.forward_pair(a, b, mode)?.0)
    }

    pub fn forward_record(&self, x: &RecordInput<S>, mode: &mut Mode<'_>) -> Result<(S, PointCache<S>)> {
        match self {
            Evaluator::Pairwise(_) => Err(self.not_pointwise()),
            Evaluator::PointwiseV1(m) => m.forward(x).map(|(s, c)| (s, PointCache::V1(c))),
            Evaluator::PointwiseV2 { model, .. } => model.forward(x, mode).map(|(s, c)| (s, PointCache::V2(c))),
            Evaluator::Linear(m) => m.forward(x).map(|(s, c)| (s, PointCache::Linear(c))),
        }
    }

    pub fn backward_record(&mut self, cache: &PointCache<S>, grad: S) {
        match (self, cache) {
            (Evaluator::PointwiseV1(m), PointCache::V1(c)) => m.backward(c, grad),
            (Evaluator::PointwiseV2 { model, .. }, PointCache::V2(c)) => model.backward(c, grad),
            (Evaluator::Linear(m), PointCache::Linear(c)) => m.backward(c, grad),
            _ => panic!("cache does not belong to this evaluator"),
        }
    }

    pub fn score_record(&self, x: &RecordInput<S>, mode: &mut Mode<'_>) -> Result<S> {
        Ok(self.forward_record(x, mode)?.0)
    }

    /// Eval-mode score of `first` over `second`: the pairwise score itself,
    /// or the difference of the two pointwise scores.
    pub fn preference_score(&self, first: &LoopStateRecord, second: &LoopStateRecord) -> Result<f64> {
        let a = RecordInput::from_record(first)?;
        let b = RecordInput::from_record(second)?;
        let mut mode = Mode::Eval;
        if self.is_pairwise() {
            Ok(self.score_pair(&a, &b, &mut mode)?.as_f64())
        } else {
            let sa = self.score_record(&a, &mut mode)?;
            let sb = self.score_record(&b, &mut mode)?;
            Ok((sa - sb).as_f64())
        }
    }

    /// Same architecture and values in another element type.
    pub fn cast<T: Real>(&self) -> Evaluator<T> {
        let mut out = Evaluator::<T>::zeros(&self.config()).expect("config was valid");
        for (dst, src) in out.params_mut().into_iter().zip(self.params()) {
            *dst = src.cast();
        }
        out
    }

    /// Overwrites parameter values; names and shapes must match exactly.
    pub fn load_values(&mut self, values: &[ParamTensor<S>]) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(Error::shape("parameter tensors", params.len(), values.len()));
        }
        for (dst, src) in params.iter_mut().zip(values) {
            if dst.name() != src.name() || dst.shape() != src.shape() {
                return Err(Error::shape(
                    format!("parameter {}", dst.name()),
                    format!("{} {:?}", dst.name(), dst.shape()),
                    format!("{} {:?}", src.name(), src.shape()),
                ));
            }
            dst.set_values(src.values())?;
        }
        Ok(())
    }
}

impl<S: Real> Parameterized<S> for Evaluator<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        match self {
            Evaluator::Pairwise(m) => m.params(),
            Evaluator::PointwiseV1(m) => m.params(),
            Evaluator::PointwiseV2 { model, .. } => model.params(),
            Evaluator::Linear(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        match self {
            Evaluator::Pairwise(m) => m.params_mut(),
            Evaluator::PointwiseV1(m) => m.params_mut(),
            Evaluator::PointwiseV2 { model, .. } => model.params_mut(),
            Evaluator::Linear(m) => m.params_mut(),
        }
    }
}

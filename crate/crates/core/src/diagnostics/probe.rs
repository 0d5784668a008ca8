use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::features::{concat_pooled, mean_pool, LoopStateRecord, PairSource, PreferencePair};
use crate::nn::{log_sigmoid, sigmoid};
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ProbeMode {
    /// Classify `chosen - rejected` against `rejected - chosen`.
    PairwiseDiff,
    /// Classify single records by role.
    Independent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Mean-pooled last loop step.
    #[default]
    FinalStep,
    /// Mean-pooled steps concatenated in step order.
    AllStepsConcat,
}

impl FeatureSource {
    fn extract(self, record: &LoopStateRecord) -> Result<Vec<f64>> {
        let pooled = mean_pool(record)?;
        let v = match self {
            FeatureSource::FinalStep => pooled.last().cloned().unwrap_or_default(),
            FeatureSource::AllStepsConcat => concat_pooled(&pooled),
        };
        Ok(v.into_iter().map(f64::from).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// L2 coefficient on the mean log-loss scale: `mean(loss) + λ/2·|w|²`.
    pub lambda: f64,
    pub train_frac: f64,
    pub seed: u64,
    pub max_iters: u64,
    pub grad_tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { lambda: 1e-4, train_frac: 0.6, seed: 0, max_iters: 500, grad_tol: 1e-6 }
    }
}

/// A fitted logistic regression; the intercept is not regularized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: u64,
    pub converged: bool,
    pub grad_norm: f64,
}

impl LogisticFit {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Fraction classified correctly; a zero logit predicts class 0.
    pub fn accuracy(&self, x: &[Vec<f64>], y: &[bool]) -> f64 {
        let correct = x.iter().zip(y).filter(|(row, label)| (self.logit(row) > 0.0) == **label).count();
        correct as f64 / x.len().max(1) as f64
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

struct Objective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    lambda: f64,
}

impl Objective<'_> {
    fn margins(&self, p: &[f64]) -> impl Iterator<Item = (f64, &Vec<f64>)> + '_ {
        let (w, b) = p.split_at(p.len() - 1);
        let w = w.to_vec();
        let b = b[0];
        self.x.iter().zip(self.y).map(move |(row, label)| {
            let z = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
            (if *label { z } else { -z }, row)
        })
    }

    fn reg(&self, p: &[f64]) -> f64 {
        0.5 * self.lambda * p[..p.len() - 1].iter().map(|w| w * w).sum::<f64>()
    }

    fn grad(&self, p: &[f64]) -> Vec<f64> {
        let n = self.x.len() as f64;
        let d = p.len() - 1;
        let mut g = vec![0.0; p.len()];
        for ((m, row), label) in self.margins(p).zip(self.y) {
            // d/dz of -log σ(±z)
            let coef = -sigmoid(-m) * if *label { 1.0 } else { -1.0 } / n;
            for (gi, v) in g[..d].iter_mut().zip(row) {
                *gi += coef * v;
            }
            g[d] += coef;
        }
        for (gi, w) in g[..d].iter_mut().zip(p) {
            *gi += self.lambda * w;
        }
        g
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let n = self.x.len() as f64;
        Ok(self.margins(p).map(|(m, _)| -log_sigmoid(m)).sum::<f64>() / n + self.reg(p))
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.grad(p))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full-batch L-BFGS fit of an L2-regularized logistic regression.
pub fn fit_logistic_probe(x: &[Vec<f64>], y: &[bool], lambda: f64) -> Result<LogisticFit> {
    fit_with(x, y, lambda, 500, 1e-6)
}

fn fit_with(x: &[Vec<f64>], y: &[bool], lambda: f64, max_iters: u64, grad_tol: f64) -> Result<LogisticFit> {
    if x.len() != y.len() {
        return Err(Error::shape("probe labels", x.len(), y.len()));
    }
    let positives = y.iter().filter(|v| **v).count();
    if positives < 2 || y.len() - positives < 2 {
        return Err(Error::Probe(format!(
            "need at least two examples of each class, got {positives} positive and {} negative",
            y.len() - positives
        )));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::shape("probe feature row", d, row.len()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe features".into()));
    }
    let problem = Objective { x, y, lambda };
    let init = vec![0.0; d + 1];
    let g0 = problem.grad(&init);
    if norm(&g0) < grad_tol {
        return Ok(LogisticFit {
            weights: vec![0.0; d],
            intercept: 0.0,
            iterations: 0,
            converged: true,
            grad_norm: norm(&g0),
        });
    }
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(grad_tol)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .map_err(|e| Error::Probe(e.to_string()))?;
    let result = Executor::new(problem, solver)
        .configure(|s| s.param(init).max_iters(max_iters))
        .run()
        .map_err(|e| Error::Probe(format!("L-BFGS failed: {e}")))?;
    let state = result.state();
    let best = state.get_best_param().cloned().ok_or_else(|| Error::Probe("L-BFGS returned no parameters".into()))?;
    let grad_norm = norm(&Objective { x, y, lambda }.grad(&best));
    let converged = grad_norm < grad_tol
        || matches!(state.get_termination_status(), TerminationStatus::Terminated(TerminationReason::SolverConverged));
    if !converged {
        log::warn!("probe stopped after {} iterations, gradient norm {grad_norm:.2e}", state.get_iter());
    }
    let (w, b) = best.split_at(d);
    Ok(LogisticFit { weights: w.to_vec(), intercept: b[0], iterations: state.get_iter(), converged, grad_norm })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub mode: ProbeMode,
    pub feature_source: FeatureSource,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    /// `1 - test_acc`: the accuracy of the inverted classifier.
    pub flipped_test_acc: f64,
    pub weight_norm: f64,
    pub intercept: f64,
    pub iterations: u64,
    pub converged: bool,
}

fn split<'a>(
    pairs: &'a [PreferencePair],
    opts: &ProbeOptions,
) -> Result<(Vec<&'a PreferencePair>, Vec<&'a PreferencePair>)> {
    if !(opts.train_frac > 0.0 && opts.train_frac < 1.0) {
        return Err(Error::Config(format!("train_frac must be in (0, 1), got {}", opts.train_frac)));
    }
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.shuffle(&mut stream(opts.seed, Stream::ProbeSplit));
    let n_train = (pairs.len() as f64 * opts.train_frac).round() as usize;
    if n_train < 2 || pairs.len() - n_train < 1 {
        return Err(Error::Probe(format!("{} pairs are too few to split", pairs.len())));
    }
    let (a, b) = idx.split_at(n_train);
    Ok((a.iter().map(|i| &pairs[*i]).collect(), b.iter().map(|i| &pairs[*i]).collect()))
}

type Rows = (Vec<Vec<f64>>, Vec<bool>);

fn diff_rows(pairs: &[&PreferencePair], source: FeatureSource) -> Result<Rows> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for p in pairs {
        let c = source.extract(&p.chosen)?;
        let r = source.extract(&p.rejected)?;
        let diff: Vec<f64> = c.iter().zip(&r).map(|(a, b)| a - b).collect();
        x.push(diff.iter().map(|v| -v).collect());
        y.push(false);
        x.push(diff);
        y.push(true);
    }
    Ok((x, y))
}

fn role_rows(pairs: &[&PreferencePair], source: FeatureSource) -> Result<Rows> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for p in pairs {
        x.push(source.extract(&p.chosen)?);
        y.push(true);
        x.push(source.extract(&p.rejected)?);
        y.push(false);
    }
    Ok((x, y))
}

fn run_probe(
    source: &dyn PairSource,
    mode: ProbeMode,
    features: FeatureSource,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let pairs = source.load_all()?;
    let (train, test) = split(&pairs, opts)?;
    let rows = match mode {
        ProbeMode::PairwiseDiff => diff_rows,
        ProbeMode::Independent => role_rows,
    };
    let (xtr, ytr) = rows(&train, features)?;
    let (xte, yte) = rows(&test, features)?;
    let fit = fit_with(&xtr, &ytr, opts.lambda, opts.max_iters, opts.grad_tol)?;
    let test_acc = fit.accuracy(&xte, &yte);
    Ok(ProbeReport {
        mode,
        feature_source: features,
        train_pairs: train.len(),
        test_pairs: test.len(),
        train_acc: fit.accuracy(&xtr, &ytr),
        test_acc,
        flipped_test_acc: 1.0 - test_acc,
        weight_norm: fit.weight_norm(),
        intercept: fit.intercept,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

/// Linear probe on response differences in both orientations.
pub fn pairwise_probe(source: &dyn PairSource, features: FeatureSource, opts: &ProbeOptions) -> Result<ProbeReport> {
    run_probe(source, ProbeMode::PairwiseDiff, features, opts)
}

/// Linear probe on single responses, labelled by role.
pub fn independent_probe(source: &dyn PairSource, features: FeatureSource, opts: &ProbeOptions) -> Result<ProbeReport> {
    run_probe(source, ProbeMode::Independent, features, opts)
}

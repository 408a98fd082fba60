//! Logistic regression trained by mini-batch gradient ascent on the
//! log-likelihood
//!
//! ```text
//! L(w, b) = Σ_i  y_i ln σ(w·x_i + b) + (1 − y_i) ln(1 − σ(w·x_i + b))
//! ```
//!
//! Targets may be fractional in `[0,1]`, which is what the PaO variant needs
//! (its targets are the rank-scaled performances). A model with `k` outputs
//! is `k` independent single-output problems on the same inputs, so
//! [`train_multi`] trains each output separately with its own derived seed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// `1 / (1 + e^{−z})`, evaluated without overflow for any finite `z`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// `ln σ(z) = −softplus(−z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("model parameters must be finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(input_dim: usize) -> Self {
        Self {
            weights: vec![0.0; input_dim],
            bias: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    /// `w·x + b` without a dimension check.
    pub fn score_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.score_unchecked(x))
    }

    /// `σ(w·x + b)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(x)?))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                found,
            });
        }
        Ok(())
    }
}

pub fn predict(model: &LinearModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// `s` single-output models over a shared input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiOutputModel {
    outputs: Vec<LinearModel>,
}

impl MultiOutputModel {
    pub fn new(outputs: Vec<LinearModel>) -> Result<Self> {
        let m = outputs
            .first()
            .ok_or_else(|| Error::Argument("multi-output model needs at least one output".into()))?
            .input_dim();
        if let Some(o) = outputs.iter().find(|o| o.input_dim() != m) {
            return Err(Error::Dimension {
                expected: m,
                found: o.input_dim(),
            });
        }
        Ok(Self { outputs })
    }

    pub fn outputs(&self) -> &[LinearModel] {
        &self.outputs
    }

    pub fn input_dim(&self) -> usize {
        self.outputs[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.outputs.iter().map(|o| o.predict(x)).collect()
    }
}

/// Inputs `X` (n × m) and targets `Y` (n × k) with entries in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    x: Matrix,
    y: Matrix,
}

impl TrainingSet {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Data("training set has no rows".into()));
        }
        if x.rows() != y.rows() {
            return Err(Error::Dimension {
                expected: x.rows(),
                found: y.rows(),
            });
        }
        if let Some(v) = y.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("target {v} outside [0, 1]")));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite input value".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.y.cols()
    }

    /// Rows at `indices`.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.x.select_rows(indices), self.y.select_rows(indices))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_init_scale: f64,
    pub l2_penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            weight_init_scale: 0.1,
            l2_penalty: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Argument("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be positive".into()));
        }
        if !(self.weight_init_scale.is_finite() && self.weight_init_scale >= 0.0) {
            return Err(Error::Argument("weight_init_scale must be nonnegative".into()));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::Argument("l2_penalty must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

fn check_column(model: &LinearModel, x: &Matrix, y: &[f64]) -> Result<()> {
    if x.cols() != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            found: x.cols(),
        });
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            found: y.len(),
        });
    }
    Ok(())
}

fn sample_log_likelihood(z: f64, y: f64) -> f64 {
    let mut ll = 0.0;
    if y != 0.0 {
        ll += y * log_sigmoid(z);
    }
    if y != 1.0 {
        ll += (1.0 - y) * log_sigmoid(-z);
    }
    ll
}

/// Log-likelihood of a single-output model on `(x, y)`.
pub fn log_likelihood(model: &LinearModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    check_column(model, x, y)?;
    Ok(x.iter_rows()
        .zip(y)
        .map(|(row, &yi)| sample_log_likelihood(model.score_unchecked(row), yi))
        .sum())
}

/// Sum of the per-output log-likelihoods.
pub fn log_likelihood_multi(model: &MultiOutputModel, x: &Matrix, y: &Matrix) -> Result<f64> {
    if y.cols() != model.output_dim() {
        return Err(Error::Dimension {
            expected: model.output_dim(),
            found: y.cols(),
        });
    }
    let mut total = 0.0;
    for (h, out) in model.outputs().iter().enumerate() {
        total += log_likelihood(out, x, &y.col(h))?;
    }
    Ok(total)
}

/// `(Σ_i (y_i − σ(z_i)) x_i, Σ_i (y_i − σ(z_i)))`.
pub fn gradient(model: &LinearModel, x: &Matrix, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_column(model, x, y)?;
    let mut grad_w = vec![0.0; model.input_dim()];
    let mut grad_b = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let residual = yi - sigmoid(model.score_unchecked(row));
        for (g, xv) in grad_w.iter_mut().zip(row) {
            *g += residual * xv;
        }
        grad_b += residual;
    }
    Ok((grad_w, grad_b))
}

fn penalized_objective(model: &LinearModel, x: &Matrix, y: &[f64], l2: f64) -> f64 {
    let ll: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, &yi)| sample_log_likelihood(model.score_unchecked(row), yi))
        .sum();
    if l2 > 0.0 {
        ll - 0.5 * l2 * dot(&model.weights, &model.weights)
    } else {
        ll
    }
}

fn initial_model(input_dim: usize, cfg: &TrainConfig, rng: &mut seed::Rng) -> LinearModel {
    let scale = cfg.weight_init_scale;
    let weights = (0..input_dim)
        .map(|_| {
            if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            }
        })
        .collect();
    LinearModel { weights, bias: 0.0 }
}

/// One pass over `order` in mini-batches.
fn run_epoch(model: &mut LinearModel, x: &Matrix, y: &[f64], order: &[usize], cfg: &TrainConfig, grad: &mut [f64]) {
    let n = x.rows() as f64;
    for batch in order.chunks(cfg.batch_size) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for &i in batch {
            let row = x.row(i);
            let residual = y[i] - sigmoid(model.score_unchecked(row));
            for (g, xv) in grad.iter_mut().zip(row) {
                *g += residual * xv;
            }
            grad_b += residual;
        }
        let inv = 1.0 / batch.len() as f64;
        let decay = cfg.l2_penalty / n;
        for (w, g) in model.weights.iter_mut().zip(grad.iter()) {
            *w += cfg.learning_rate * (g * inv - decay * *w);
        }
        model.bias += cfg.learning_rate * grad_b * inv;
    }
}

/// Summary of a training call.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub epochs_run: usize,
    /// Epoch whose iterate was returned (0 = initial model).
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Penalized training objective of the returned model.
    pub train_objective: f64,
    /// Validation log-likelihood of the returned model, when a validation set was given.
    pub validation_log_likelihood: Option<f64>,
}

/// Validation-driven early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStopping {
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

/// Trains one output column. Without early stopping the best epoch-end
/// iterate on the training objective is returned (the initial model
/// included), so the objective never ends below its starting value.
pub fn train_column(
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    validation: Option<(&Matrix, &[f64])>,
    early: Option<EarlyStopping>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x.rows() == 0 {
        return Err(Error::Data("training set has no rows".into()));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut model = initial_model(x.cols(), cfg, &mut rng);
    check_column(&model, x, y)?;
    if let Some((vx, vy)) = validation {
        check_column(&model, vx, vy)?;
    }
    let early = if validation.is_some() { early } else { None };

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut grad = vec![0.0; x.cols()];

    let objective = |m: &LinearModel| penalized_objective(m, x, y, cfg.l2_penalty);
    let val_ll = |m: &LinearModel| validation.map(|(vx, vy)| penalized_objective(m, vx, vy, 0.0));

    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut best_train = objective(&model);
    let mut best_val = val_ll(&model);
    let mut stale = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        run_epoch(&mut model, x, y, &order, cfg, &mut grad);
        epochs_run = epoch;

        let train_obj = objective(&model);
        if !train_obj.is_finite() || !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch });
        }

        match early {
            Some(stop) => {
                let v = val_ll(&model).unwrap_or(f64::NEG_INFINITY);
                if v > best_val.unwrap_or(f64::NEG_INFINITY) {
                    best_val = Some(v);
                    best_train = train_obj;
                    best = model.clone();
                    best_epoch = epoch;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= stop.patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
            None => {
                if train_obj >= best_train {
                    best_train = train_obj;
                    best = model.clone();
                    best_epoch = epoch;
                }
            }
        }
    }

    let validation_log_likelihood = if early.is_some() { best_val } else { val_ll(&best) };
    Ok(TrainOutcome {
        model: best,
        epochs_run,
        best_epoch,
        stopped_early,
        train_objective: best_train,
        validation_log_likelihood,
    })
}

fn single_column(ts: &TrainingSet) -> Result<Vec<f64>> {
    if ts.output_dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: ts.output_dim(),
        });
    }
    Ok(ts.y().col(0))
}

/// Single-output training (PaO).
pub fn train(ts: &TrainingSet, cfg: &TrainConfig) -> Result<LinearModel> {
    let y = single_column(ts)?;
    Ok(train_column(ts.x(), &y, cfg, None, None)?.model)
}

/// Single-output training with a validation set and optional early stopping.
pub fn train_validated(
    ts: &TrainingSet,
    validation: &TrainingSet,
    cfg: &TrainConfig,
    early: Option<EarlyStopping>,
) -> Result<TrainOutcome> {
    let y = single_column(ts)?;
    let vy = single_column(validation)?;
    train_column(ts.x(), &y, cfg, Some((validation.x(), &vy)), early)
}

/// Seed of output `h` in multi-output training: `seed + h`, so output 0
/// reproduces single-output training exactly.
pub fn output_seed(seed: u64, h: usize) -> u64 {
    seed.wrapping_add(h as u64)
}

/// Multi-output training (PaI): one independent problem per output column.
pub fn train_multi(ts: &TrainingSet, cfg: &TrainConfig) -> Result<MultiOutputModel> {
    train_multi_with_seeds(ts, cfg, output_seed)
}

/// [`train_multi`] with a caller-supplied seed rule `(cfg.seed, h) → seed_h`.
pub fn train_multi_with_seeds(
    ts: &TrainingSet,
    cfg: &TrainConfig,
    seed_rule: impl Fn(u64, usize) -> u64,
) -> Result<MultiOutputModel> {
    let outputs = (0..ts.output_dim())
        .map(|h| {
            let y = ts.y().col(h);
            Ok(train_column(ts.x(), &y, &cfg.with_seed(seed_rule(cfg.seed, h)), None, None)?.model)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiOutputModel::new(outputs)
}

/// Multi-output counterpart of [`train_validated`]. Each output stops on its
/// own validation log-likelihood.
pub fn train_multi_validated(
    ts: &TrainingSet,
    validation: &TrainingSet,
    cfg: &TrainConfig,
    early: Option<EarlyStopping>,
) -> Result<(MultiOutputModel, Vec<TrainOutcome>)> {
    if validation.output_dim() != ts.output_dim() {
        return Err(Error::Dimension {
            expected: ts.output_dim(),
            found: validation.output_dim(),
        });
    }
    let outcomes = (0..ts.output_dim())
        .map(|h| {
            let y = ts.y().col(h);
            let vy = validation.y().col(h);
            train_column(
                ts.x(),
                &y,
                &cfg.with_seed(output_seed(cfg.seed, h)),
                Some((validation.x(), &vy)),
                early,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let model = MultiOutputModel::new(outcomes.iter().map(|o| o.model.clone()).collect())?;
    Ok((model, outcomes))
}

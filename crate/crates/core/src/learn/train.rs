use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};
use crate::learn::{Gradients, UnrolledNetwork};
use crate::linalg::{l1_norm, rng};
use crate::model::MeasurementModel;

/// `‖y − Mz‖² + λ‖z‖₁`
pub fn evaluate_objective(z: ArrayView1<f64>, model: &MeasurementModel, lambda: f64) -> f64 {
    objective(model.matrix.view(), model.y.view(), z, lambda)
}

pub fn objective(matrix: ArrayView2<f64>, y: ArrayView1<f64>, z: ArrayView1<f64>, lambda: f64) -> f64 {
    let r = &y - &matrix.dot(&z);
    r.dot(&r) + lambda * l1_norm(z)
}

/// Measurements sharing one matrix, with optional supervised targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: Array2<f64>,
    pub ys: Vec<Array1<f64>>,
    pub targets: Option<Vec<Array1<f64>>>,
}

impl Dataset {
    pub fn new(matrix: Array2<f64>, ys: Vec<Array1<f64>>, targets: Option<Vec<Array1<f64>>>) -> Result<Self> {
        for y in &ys {
            check_len("dataset measurement", matrix.nrows(), y.len())?;
        }
        if let Some(t) = &targets {
            check_len("dataset targets", ys.len(), t.len())?;
            for x in t {
                check_len("dataset target", matrix.ncols(), x.len())?;
            }
        }
        Ok(Self { matrix, ys, targets })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            matrix: self.matrix.clone(),
            ys: idx.iter().map(|&i| self.ys[i].clone()).collect(),
            targets: self
                .targets
                .as_ref()
                .map(|t| idx.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    /// Splits off the last `fraction` of the samples.
    pub fn split(&self, fraction: f64) -> (Dataset, Dataset) {
        let n_test = ((self.len() as f64) * fraction).round() as usize;
        let cut = self.len() - n_test.min(self.len());
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrainingObjective {
    /// `‖z_T − target‖²`
    SupervisedL2,
    /// `‖y − Mz_T‖² + λ‖z_T‖₁`
    DirectObjective { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub objective: TrainingObjective,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before the learning rate is halved.
    pub patience: usize,
    pub learn_lambda: bool,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            objective: TrainingObjective::SupervisedL2,
            batch_size: 1000,
            learning_rate: 0.001,
            momentum: 0.9,
            epochs: 50,
            validation_fraction: 0.1,
            patience: 3,
            learn_lambda: true,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(param(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(param(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(param("batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(param("validation fraction must lie in [0, 1)"));
        }
        if let TrainingObjective::DirectObjective { lambda } = self.objective {
            if !(lambda >= 0.0) {
                return Err(param("objective λ must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    /// Parameters with the best validation loss (training loss without a validation split).
    pub network: UnrolledNetwork,
    /// Row 0 holds the losses of the initialization.
    pub history: Vec<EpochLoss>,
    pub best_epoch: usize,
}

impl TrainingOutcome {
    /// CSV with header `epoch,train_loss,val_loss,lr`.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,lr\n");
        for h in &self.history {
            let val = h.val_loss.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:e},{},{:e}", h.epoch, h.train_loss, val, h.lr);
        }
        s
    }
}

const CHUNK: usize = 16;

/// Loss and gradient of one sample.
pub fn sample_gradient(
    net: &UnrolledNetwork,
    data: &Dataset,
    i: usize,
    objective: TrainingObjective,
) -> Result<(f64, Gradients)> {
    let y = data.ys[i].view();
    let fwd = net.forward(y)?;
    let z = fwd.output();
    let (loss, g) = loss_and_grad(data, i, z, objective)?;
    Ok((loss, net.backward(y, &fwd, g.view())?))
}

fn loss_and_grad(data: &Dataset, i: usize, z: &Array1<f64>, objective: TrainingObjective) -> Result<(f64, Array1<f64>)> {
    match objective {
        TrainingObjective::SupervisedL2 => {
            let target = data
                .targets
                .as_ref()
                .ok_or_else(|| param("supervised training needs targets"))?;
            let diff = z - &target[i];
            Ok((diff.dot(&diff), diff * 2.0))
        }
        TrainingObjective::DirectObjective { lambda } => {
            let r = &data.matrix.dot(z) - &data.ys[i];
            let loss = r.dot(&r) + lambda * l1_norm(z.view());
            let g = data.matrix.t().dot(&r) * 2.0 + z.mapv(|v| lambda * sign(v));
            Ok((loss, g))
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sample_loss(net: &UnrolledNetwork, data: &Dataset, i: usize, objective: TrainingObjective) -> Result<f64> {
    let z = net.output(data.ys[i].view())?;
    Ok(loss_and_grad(data, i, &z, objective)?.0)
}

/// Mean loss over `idx`, summed in index order.
pub fn mean_loss(net: &UnrolledNetwork, data: &Dataset, idx: &[usize], objective: TrainingObjective) -> Result<f64> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let losses: Vec<f64> = idx
        .par_iter()
        .map(|&i| sample_loss(net, data, i, objective))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / idx.len() as f64)
}

/// Mean loss and gradient over `idx`; chunks are fixed so the reduction
/// order does not depend on the thread pool.
pub fn batch_gradient(
    net: &UnrolledNetwork,
    data: &Dataset,
    idx: &[usize],
    objective: TrainingObjective,
) -> Result<(f64, Gradients)> {
    let partial: Vec<(f64, Gradients)> = idx
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<(f64, Gradients)> {
            let mut g = Gradients::zeros(net.d(), net.m());
            let mut loss = 0.0;
            for &i in chunk {
                let (l, gi) = sample_gradient(net, data, i, objective)?;
                loss += l;
                g.add_scaled(&gi, 1.0);
            }
            Ok((loss, g))
        })
        .collect::<Result<_>>()?;
    let mut total = Gradients::zeros(net.d(), net.m());
    let mut loss = 0.0;
    for (l, g) in &partial {
        loss += l;
        total.add_scaled(g, 1.0);
    }
    let n = idx.len().max(1) as f64;
    total.a /= n;
    total.u /= n;
    total.lambda /= n;
    Ok((loss / n, total))
}

/// Minibatch SGD with heavy-ball momentum; the learning rate halves after
/// `patience` epochs without validation improvement.
pub fn train(initial: &UnrolledNetwork, data: &Dataset, config: &TrainingConfig) -> Result<TrainingOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(param("training data is empty"));
    }
    initial.check_dims(data.matrix.ncols(), data.matrix.nrows())?;
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(config.seed, 0));
    let mut n_val = ((n as f64) * config.validation_fraction).floor() as usize;
    if config.validation_fraction > 0.0 && n_val == 0 && n >= 2 {
        n_val = 1;
    }
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_idx = train_idx.to_vec();
    if train_idx.is_empty() {
        return Err(param("validation split leaves no training samples"));
    }
    let val_idx = val_idx.to_vec();
    let objective = config.objective;

    let mut net = initial.clone();
    let mut velocity = Gradients::zeros(net.d(), net.m());
    let mut lr = config.learning_rate;
    let evaluate = |net: &UnrolledNetwork| -> Result<(f64, Option<f64>)> {
        let tl = mean_loss(net, data, &train_idx, objective)?;
        let vl = if val_idx.is_empty() {
            None
        } else {
            Some(mean_loss(net, data, &val_idx, objective)?)
        };
        Ok((tl, vl))
    };
    let (tl, vl) = evaluate(&net)?;
    let mut history = vec![EpochLoss {
        epoch: 0,
        train_loss: tl,
        val_loss: vl,
        lr,
    }];
    let mut best = (vl.unwrap_or(tl), net.clone(), 0);
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        let mut epoch_order = train_idx.clone();
        epoch_order.shuffle(&mut rng(config.seed, epoch as u64));
        for batch in epoch_order.chunks(config.batch_size) {
            let (_, mut g) = batch_gradient(&net, data, batch, objective)?;
            if !config.learn_lambda {
                g.lambda = 0.0;
            }
            velocity.a *= config.momentum;
            velocity.u *= config.momentum;
            velocity.lambda *= config.momentum;
            velocity.add_scaled(&g, -lr);
            net.apply_update(&velocity);
        }
        let (tl, vl) = evaluate(&net)?;
        let monitored = vl.unwrap_or(tl);
        if !monitored.is_finite() || !tl.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: if tl.is_finite() { monitored } else { tl },
            });
        }
        history.push(EpochLoss {
            epoch,
            train_loss: tl,
            val_loss: vl,
            lr,
        });
        if monitored < best.0 {
            best = (monitored, net.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience.max(1) {
                lr *= 0.5;
                stale = 0;
            }
        }
    }
    Ok(TrainingOutcome {
        network: best.1,
        history,
        best_epoch: best.2,
    })
}

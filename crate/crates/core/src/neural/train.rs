//! Mini-batch training with Adam, seeded shuffling, validation-loss early
//! stopping, and a finite-difference gradient check.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::loss::{compute_loss, loss_grad_logits, LossKind, Targets};
use super::model::{ModelGrads, ModelParams};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub sigmoid_threshold: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 2000,
            learning_rate: 1e-2,
            max_epochs: 50,
            patience: 2,
            sigmoid_threshold: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            loss: LossKind::MultiLabelBce,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        if !(self.sigmoid_threshold > 0.0 && self.sigmoid_threshold < 1.0) {
            return Err(Error::InvalidArgument(
                "sigmoid_threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Borrowed view over a flat sample store: features are sample-major then
/// step-major f32, labels one byte per (sample, codeword) with 0 = negative,
/// 1 = near-optimal, 2 = best (also near-optimal).
#[derive(Debug, Clone, Copy)]
pub struct BatchSource<'a> {
    pub features: &'a [f32],
    pub labels: &'a [u8],
    pub steps: usize,
    pub dim: usize,
    pub outputs: usize,
    pub count: usize,
}

impl<'a> BatchSource<'a> {
    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.count * self.steps * self.dim {
            return Err(Error::Inconsistent(format!(
                "feature buffer holds {} values, expected {}",
                self.features.len(),
                self.count * self.steps * self.dim
            )));
        }
        if self.labels.len() != self.count * self.outputs {
            return Err(Error::Inconsistent(format!(
                "label buffer holds {} values, expected {}",
                self.labels.len(),
                self.count * self.outputs
            )));
        }
        Ok(())
    }

    /// Materializes the step tensors, multi-hot targets, and best-class
    /// indices for the given sample rows.
    pub fn gather(&self, rows: &[usize]) -> (Vec<Array2<f64>>, Array2<f64>, Vec<usize>) {
        let b = rows.len();
        let mut steps = vec![Array2::<f64>::zeros((b, self.dim)); self.steps];
        let mut multihot = Array2::<f64>::zeros((b, self.outputs));
        let mut best = vec![0usize; b];
        for (r, &sample) in rows.iter().enumerate() {
            for (k, step) in steps.iter_mut().enumerate() {
                let base = (sample * self.steps + k) * self.dim;
                for d in 0..self.dim {
                    step[(r, d)] = f64::from(self.features[base + d]);
                }
            }
            let lbase = sample * self.outputs;
            for q in 0..self.outputs {
                let v = self.labels[lbase + q];
                if v != 0 {
                    multihot[(r, q)] = 1.0;
                }
                if v == 2 {
                    best[r] = q;
                }
            }
        }
        (steps, multihot, best)
    }
}

/// Loss/metric record for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

fn batch_loss_and_grads(
    params: &mut ModelParams,
    source: &BatchSource,
    rows: &[usize],
    loss: LossKind,
    update_running: bool,
) -> Result<(f64, ModelGrads)> {
    let (steps, multihot, best) = source.gather(rows);
    let (probs, cache) = params.forward_train(&steps, update_running)?;
    let targets = if loss.uses_softmax() {
        Targets::Classes(&best)
    } else {
        Targets::MultiHot(&multihot)
    };
    let value = compute_loss(loss, &probs, &targets);
    let dlogits = loss_grad_logits(loss, &probs, &targets);
    let grads = params.backward(&cache, &dlogits)?;
    Ok((value, grads))
}

fn eval_loss(params: &ModelParams, source: &BatchSource, loss: LossKind, batch: usize) -> Result<f64> {
    let mut acc = 0.0;
    let mut seen = 0usize;
    let rows: Vec<usize> = (0..source.count).collect();
    for chunk in rows.chunks(batch) {
        let (steps, multihot, best) = source.gather(chunk);
        let probs = params.forward_infer(&steps)?;
        let targets = if loss.uses_softmax() {
            Targets::Classes(&best)
        } else {
            Targets::MultiHot(&multihot)
        };
        acc += compute_loss(loss, &probs, &targets) * chunk.len() as f64;
        seen += chunk.len();
    }
    Ok(acc / seen as f64)
}

/// Trains on `train_set`, validating on `val_set` after every epoch.
///
/// Epochs shuffle with a stream derived from `(seed, epoch)`. Training stops
/// after `patience` consecutive epochs without a validation-loss improvement
/// or at `max_epochs`, returning the parameters (and running stats) from the
/// best validation epoch. Single-threaded and bit-reproducible given the
/// seed.
pub fn train(
    train_set: &BatchSource,
    val_set: &BatchSource,
    params: ModelParams,
    tcfg: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochStats>)> {
    tcfg.validate()?;
    train_set.validate()?;
    val_set.validate()?;
    if train_set.dim != params.dims.input || train_set.outputs != params.dims.outputs {
        return Err(Error::DimensionMismatch(format!(
            "data dims ({}, {}) vs model dims ({}, {})",
            train_set.dim, train_set.outputs, params.dims.input, params.dims.outputs
        )));
    }
    if tcfg.loss.uses_softmax() != matches!(params.head, super::model::HeadKind::Softmax) {
        return Err(Error::InvalidArgument(
            "loss kind and model head disagree".into(),
        ));
    }

    let mut params = params;
    if tcfg.max_epochs == 0 {
        return Ok((params, Vec::new()));
    }

    let lens: Vec<usize> = params.flat_tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::new(tcfg.adam(), &lens);

    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut epochs_since_best = 0usize;

    let mut order: Vec<usize> = (0..train_set.count).collect();
    for epoch in 0..tcfg.max_epochs {
        order.shuffle(&mut stream(tcfg.seed, "shuffle", epoch as u64));

        let mut train_acc = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(tcfg.batch_size) {
            let (value, grads) =
                batch_loss_and_grads(&mut params, train_set, chunk, tcfg.loss, true)?;
            let grad_views = grads.flat_tensors();
            let mut param_views = params.flat_tensors_mut();
            adam.step(&mut param_views, &grad_views, tcfg.learning_rate);
            train_acc += value * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = train_acc / seen as f64;
        let val_loss = eval_loss(&params, val_set, tcfg.loss, tcfg.batch_size)?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_params = params.clone();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= tcfg.patience {
                break;
            }
        }
    }
    Ok((best_params, history))
}

/// Maximum relative discrepancy between analytic gradients and central
/// differences of the loss, over every parameter of the model.
///
/// `|analytic - numeric| / max(1, |analytic|)` with the stated step. Meant
/// for small models in double precision.
pub fn gradient_check(
    params: &mut ModelParams,
    source: &BatchSource,
    rows: &[usize],
    loss: LossKind,
    step: f64,
) -> Result<f64> {
    let (_, analytic) = batch_loss_and_grads(params, source, rows, loss, false)?;
    let analytic_flat: Vec<Vec<f64>> = analytic
        .flat_tensors()
        .iter()
        .map(|t| t.to_vec())
        .collect();

    let (steps, multihot, best) = source.gather(rows);
    let mut worst = 0.0f64;
    for (ti, tensor_grad) in analytic_flat.iter().enumerate() {
        for i in 0..tensor_grad.len() {
            let original = params.flat_tensors_mut()[ti][i];

            params.flat_tensors_mut()[ti][i] = original + step;
            let plus = loss_at(params, &steps, &multihot, &best, loss)?;
            params.flat_tensors_mut()[ti][i] = original - step;
            let minus = loss_at(params, &steps, &multihot, &best, loss)?;
            params.flat_tensors_mut()[ti][i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let rel = (tensor_grad[i] - numeric).abs() / tensor_grad[i].abs().max(1.0);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

fn loss_at(
    params: &mut ModelParams,
    steps: &[Array2<f64>],
    multihot: &Array2<f64>,
    best: &[usize],
    loss: LossKind,
) -> Result<f64> {
    let (probs, _) = params.forward_train(steps, false)?;
    let targets = if loss.uses_softmax() {
        Targets::Classes(best)
    } else {
        Targets::MultiHot(multihot)
    };
    Ok(compute_loss(loss, &probs, &targets))
}

//! The codeword-prediction network: two LSTM layers over the pilot sequence,
//! two batch-normalized dense layers with LeakyReLU, and a sigmoid (or
//! softmax) output head of codebook width.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::batchnorm::{BatchNorm, BatchNormGrads, BnCache};
use super::dense::{Dense, DenseGrads};
use super::lstm::{LstmGrads, LstmLayer, LstmStepCache};
use crate::error::{Error, Result};
use crate::pilots::FeatureSequence;
use crate::rng::stream;

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Sigmoid,
    Softmax,
}

/// Layer widths of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Per-step feature width (D).
    pub input: usize,
    /// LSTM hidden width (H), both layers.
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
    /// Output width = codebook size (Q).
    pub outputs: usize,
}

impl ModelDims {
    /// 140-wide LSTM with 200/100 dense layers.
    pub fn full_scale(input: usize, outputs: usize) -> ModelDims {
        ModelDims {
            input,
            hidden: 140,
            dense1: 200,
            dense2: 100,
            outputs,
        }
    }

    /// Laptop-sized variant: 32-wide LSTM with 64/32 dense layers.
    pub fn desk_scale(input: usize, outputs: usize) -> ModelDims {
        ModelDims {
            input,
            hidden: 32,
            dense1: 64,
            dense2: 32,
            outputs,
        }
    }
}

/// All learnable tensors plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub head: HeadKind,
    pub lstm1: LstmLayer,
    pub lstm2: LstmLayer,
    pub dense1: Dense,
    pub bn1: BatchNorm,
    pub dense2: Dense,
    pub bn2: BatchNorm,
    pub out: Dense,
}

/// Gradients for every tensor of [`ModelParams`], same shapes.
#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub lstm1: LstmGrads,
    pub lstm2: LstmGrads,
    pub dense1: DenseGrads,
    pub bn1: BatchNormGrads,
    pub dense2: DenseGrads,
    pub bn2: BatchNormGrads,
    pub out: DenseGrads,
}

/// Everything the backward pass needs from a train-mode forward pass.
pub struct ForwardCache {
    lstm1_steps: Vec<LstmStepCache>,
    lstm2_steps: Vec<LstmStepCache>,
    h_final: Array2<f64>,
    bn1_cache: BnCache,
    y1: Array2<f64>,
    a1: Array2<f64>,
    bn2_cache: BnCache,
    y2: Array2<f64>,
    a2: Array2<f64>,
    batch: usize,
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

fn leaky_deriv(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn apply_head(logits: Array2<f64>, head: HeadKind) -> Array2<f64> {
    match head {
        HeadKind::Sigmoid => logits.mapv(sigmoid),
        HeadKind::Softmax => {
            let mut out = logits;
            for mut row in out.rows_mut() {
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                row.mapv_inplace(|v| v / sum);
            }
            out
        }
    }
}

impl ModelParams {
    /// Fan-in uniform initialization; the forget-gate biases start at +1.
    pub fn init(dims: ModelDims, head: HeadKind, seed: u64) -> ModelParams {
        let mut rng = stream(seed, "model-init", 0);
        let lstm1 = LstmLayer::init(dims.input, dims.hidden, &mut rng);
        let lstm2 = LstmLayer::init(dims.hidden, dims.hidden, &mut rng);
        let dense1 = Dense::init(dims.hidden, dims.dense1, &mut rng);
        let dense2 = Dense::init(dims.dense1, dims.dense2, &mut rng);
        let out = Dense::init(dims.dense2, dims.outputs, &mut rng);
        ModelParams {
            dims,
            head,
            lstm1,
            lstm2,
            dense1,
            bn1: BatchNorm::new(dims.dense1),
            dense2,
            bn2: BatchNorm::new(dims.dense2),
            out,
        }
    }

    pub fn zero_grads(&self) -> ModelGrads {
        ModelGrads {
            lstm1: self.lstm1.zeros_like(),
            lstm2: self.lstm2.zeros_like(),
            dense1: self.dense1.zeros_like(),
            bn1: self.bn1.zeros_like(),
            dense2: self.dense2.zeros_like(),
            bn2: self.bn2.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    /// Checks a batch against the configured input width.
    fn check_batch(&self, steps: &[Array2<f64>]) -> Result<usize> {
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty feature sequence".into()))?;
        let batch = first.nrows();
        for step in steps {
            if step.ncols() != self.dims.input || step.nrows() != batch {
                return Err(Error::DimensionMismatch(format!(
                    "feature step {}x{} vs expected {}x{}",
                    step.nrows(),
                    step.ncols(),
                    batch,
                    self.dims.input
                )));
            }
        }
        Ok(batch)
    }

    fn run_lstm_stack(
        &self,
        steps: &[Array2<f64>],
        batch: usize,
    ) -> (Vec<LstmStepCache>, Vec<LstmStepCache>, Array2<f64>) {
        let h = self.dims.hidden;
        let mut h1 = Array2::zeros((batch, h));
        let mut c1 = Array2::zeros((batch, h));
        let mut h2 = Array2::zeros((batch, h));
        let mut c2 = Array2::zeros((batch, h));
        let mut cache1 = Vec::with_capacity(steps.len());
        let mut cache2 = Vec::with_capacity(steps.len());
        for x in steps {
            let (h1n, c1n, k1) = self.lstm1.step(x, &h1, &c1);
            let (h2n, c2n, k2) = self.lstm2.step(&h1n, &h2, &c2);
            h1 = h1n;
            c1 = c1n;
            h2 = h2n;
            c2 = c2n;
            cache1.push(k1);
            cache2.push(k2);
        }
        (cache1, cache2, h2)
    }

    /// Train-mode forward pass over a batch: batch statistics drive the
    /// normalization layers, and running stats are updated when
    /// `update_running` is set. Returns output probabilities and the cache
    /// for [`ModelParams::backward`].
    pub fn forward_train(
        &mut self,
        steps: &[Array2<f64>],
        update_running: bool,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        let batch = self.check_batch(steps)?;
        let (lstm1_steps, lstm2_steps, h_final) = self.run_lstm_stack(steps, batch);

        let z1 = self.dense1.forward(&h_final);
        let (y1, bn1_cache) = self.bn1.forward_train(&z1, update_running);
        let a1 = y1.mapv(leaky);
        let z2 = self.dense2.forward(&a1);
        let (y2, bn2_cache) = self.bn2.forward_train(&z2, update_running);
        let a2 = y2.mapv(leaky);
        let logits = self.out.forward(&a2);
        let probs = apply_head(logits, self.head);

        Ok((
            probs,
            ForwardCache {
                lstm1_steps,
                lstm2_steps,
                h_final,
                bn1_cache,
                y1,
                a1,
                bn2_cache,
                y2,
                a2,
                batch,
            },
        ))
    }

    /// Inference forward pass: running statistics only, so the result is
    /// independent of batch composition. Fails if batch norm was never
    /// trained.
    pub fn forward_infer(&self, steps: &[Array2<f64>]) -> Result<Array2<f64>> {
        let batch = self.check_batch(steps)?;
        let (_, _, h_final) = self.run_lstm_stack(steps, batch);
        let z1 = self.dense1.forward(&h_final);
        let y1 = self.bn1.forward_infer(&z1)?;
        let a1 = y1.mapv(leaky);
        let z2 = self.dense2.forward(&a1);
        let y2 = self.bn2.forward_infer(&z2)?;
        let a2 = y2.mapv(leaky);
        let logits = self.out.forward(&a2);
        Ok(apply_head(logits, self.head))
    }

    /// Full backward pass from output pre-activation gradients, through the
    /// dense/batch-norm stack and both LSTM layers across all time steps.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Array2<f64>) -> Result<ModelGrads> {
        if dlogits.nrows() != cache.batch || dlogits.ncols() != self.dims.outputs {
            return Err(Error::DimensionMismatch(format!(
                "logit gradient {}x{} vs batch {} outputs {}",
                dlogits.nrows(),
                dlogits.ncols(),
                cache.batch,
                self.dims.outputs
            )));
        }
        let mut grads = self.zero_grads();

        let da2 = self.out.backward(&cache.a2, dlogits, &mut grads.out);
        let dy2 = &da2 * &cache.y2.mapv(leaky_deriv);
        let dz2 = self.bn2.backward(&cache.bn2_cache, &dy2, &mut grads.bn2);
        let da1 = self.dense2.backward(&cache.a1, &dz2, &mut grads.dense2);
        let dy1 = &da1 * &cache.y1.mapv(leaky_deriv);
        let dz1 = self.bn1.backward(&cache.bn1_cache, &dy1, &mut grads.bn1);
        let dh_final = self.dense1.backward(&cache.h_final, &dz1, &mut grads.dense1);

        let h = self.dims.hidden;
        let b = cache.batch;
        let steps = cache.lstm1_steps.len();
        let mut dh2 = dh_final;
        let mut dc2 = Array2::zeros((b, h));
        let mut dh1 = Array2::zeros((b, h));
        let mut dc1 = Array2::zeros((b, h));
        for t in (0..steps).rev() {
            let (dx2, dh2_prev, dc2_prev) =
                self.lstm2
                    .step_backward(&cache.lstm2_steps[t], &dh2, &dc2, &mut grads.lstm2);
            dh2 = dh2_prev;
            dc2 = dc2_prev;
            let dh1_total = &dx2 + &dh1;
            let (_, dh1_prev, dc1_prev) =
                self.lstm1
                    .step_backward(&cache.lstm1_steps[t], &dh1_total, &dc1, &mut grads.lstm1);
            dh1 = dh1_prev;
            dc1 = dc1_prev;
        }
        Ok(grads)
    }

    /// Names and shapes of all learnable tensors, in the fixed manifest
    /// order shared by the optimizer and the weight file.
    pub fn tensor_specs(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            ("lstm1.w", self.lstm1.w.shape().to_vec()),
            ("lstm1.u", self.lstm1.u.shape().to_vec()),
            ("lstm1.b", self.lstm1.b.shape().to_vec()),
            ("lstm2.w", self.lstm2.w.shape().to_vec()),
            ("lstm2.u", self.lstm2.u.shape().to_vec()),
            ("lstm2.b", self.lstm2.b.shape().to_vec()),
            ("dense1.w", self.dense1.w.shape().to_vec()),
            ("dense1.b", self.dense1.b.shape().to_vec()),
            ("bn1.gamma", self.bn1.gamma.shape().to_vec()),
            ("bn1.beta", self.bn1.beta.shape().to_vec()),
            ("dense2.w", self.dense2.w.shape().to_vec()),
            ("dense2.b", self.dense2.b.shape().to_vec()),
            ("bn2.gamma", self.bn2.gamma.shape().to_vec()),
            ("bn2.beta", self.bn2.beta.shape().to_vec()),
            ("out.w", self.out.w.shape().to_vec()),
            ("out.b", self.out.b.shape().to_vec()),
        ]
    }

    /// Mutable flat views of all learnable tensors, manifest order.
    pub fn flat_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.lstm1.w.as_slice_mut().expect("standard layout"),
            self.lstm1.u.as_slice_mut().expect("standard layout"),
            self.lstm1.b.as_slice_mut().expect("standard layout"),
            self.lstm2.w.as_slice_mut().expect("standard layout"),
            self.lstm2.u.as_slice_mut().expect("standard layout"),
            self.lstm2.b.as_slice_mut().expect("standard layout"),
            self.dense1.w.as_slice_mut().expect("standard layout"),
            self.dense1.b.as_slice_mut().expect("standard layout"),
            self.bn1.gamma.as_slice_mut().expect("standard layout"),
            self.bn1.beta.as_slice_mut().expect("standard layout"),
            self.dense2.w.as_slice_mut().expect("standard layout"),
            self.dense2.b.as_slice_mut().expect("standard layout"),
            self.bn2.gamma.as_slice_mut().expect("standard layout"),
            self.bn2.beta.as_slice_mut().expect("standard layout"),
            self.out.w.as_slice_mut().expect("standard layout"),
            self.out.b.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Immutable flat views, manifest order.
    pub fn flat_tensors(&self) -> Vec<&[f64]> {
        vec![
            self.lstm1.w.as_slice().expect("standard layout"),
            self.lstm1.u.as_slice().expect("standard layout"),
            self.lstm1.b.as_slice().expect("standard layout"),
            self.lstm2.w.as_slice().expect("standard layout"),
            self.lstm2.u.as_slice().expect("standard layout"),
            self.lstm2.b.as_slice().expect("standard layout"),
            self.dense1.w.as_slice().expect("standard layout"),
            self.dense1.b.as_slice().expect("standard layout"),
            self.bn1.gamma.as_slice().expect("standard layout"),
            self.bn1.beta.as_slice().expect("standard layout"),
            self.dense2.w.as_slice().expect("standard layout"),
            self.dense2.b.as_slice().expect("standard layout"),
            self.bn2.gamma.as_slice().expect("standard layout"),
            self.bn2.beta.as_slice().expect("standard layout"),
            self.out.w.as_slice().expect("standard layout"),
            self.out.b.as_slice().expect("standard layout"),
        ]
    }

    /// Marks both batch-norm layers usable for inference with identity
    /// statistics; benchmarking untrained architectures needs this.
    pub fn force_bn_initialized(&mut self) {
        self.bn1.force_initialized();
        self.bn2.force_initialized();
    }
}

impl ModelGrads {
    pub fn flat_tensors(&self) -> Vec<&[f64]> {
        vec![
            self.lstm1.w.as_slice().expect("standard layout"),
            self.lstm1.u.as_slice().expect("standard layout"),
            self.lstm1.b.as_slice().expect("standard layout"),
            self.lstm2.w.as_slice().expect("standard layout"),
            self.lstm2.u.as_slice().expect("standard layout"),
            self.lstm2.b.as_slice().expect("standard layout"),
            self.dense1.w.as_slice().expect("standard layout"),
            self.dense1.b.as_slice().expect("standard layout"),
            self.bn1.gamma.as_slice().expect("standard layout"),
            self.bn1.beta.as_slice().expect("standard layout"),
            self.dense2.w.as_slice().expect("standard layout"),
            self.dense2.b.as_slice().expect("standard layout"),
            self.bn2.gamma.as_slice().expect("standard layout"),
            self.bn2.beta.as_slice().expect("standard layout"),
            self.out.w.as_slice().expect("standard layout"),
            self.out.b.as_slice().expect("standard layout"),
        ]
    }
}

/// Step tensors (batch of one) for a single feature sequence.
pub fn feature_steps(features: &FeatureSequence) -> Vec<Array2<f64>> {
    features
        .steps
        .iter()
        .map(|row| Array2::from_shape_vec((1, row.len()), row.clone()).expect("row shape"))
        .collect()
}

/// Single-sequence inference: returns the Q output probabilities.
pub fn model_forward(features: &FeatureSequence, params: &ModelParams) -> Result<Vec<f64>> {
    let probs = params.forward_infer(&feature_steps(features))?;
    Ok(probs.row(0).to_vec())
}

/// Deployment rule: the highest-probability index above the threshold, the
/// global argmax when none clears it; ties resolve to the smallest index.
pub fn decode_codeword(probs: &[f64], threshold: f64) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    let mut above: Option<usize> = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > threshold && above.is_none_or(|a| p > probs[a]) {
            above = Some(i);
        }
    }
    Ok(above.unwrap_or(best))
}

/// Multi-label set output: every index whose probability clears the
/// threshold.
pub fn predicted_label_set(probs: &[f64], threshold: f64) -> Vec<bool> {
    probs.iter().map(|&p| p > threshold).collect()
}

/// Mean of per-step output column counts — helper for batched feature views.
pub fn batch_mean(probs: &Array2<f64>) -> Vec<f64> {
    probs.mean_axis(Axis(0)).map(|a| a.to_vec()).unwrap_or_default()
}

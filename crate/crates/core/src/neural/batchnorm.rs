//! Per-unit batch normalization with running statistics for inference.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    /// Set once the first training batch has updated the running stats.
    pub initialized: bool,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

/// Train-mode cache: normalized activations and the inverse std of the batch.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub x_hat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

impl BatchNorm {
    pub fn new(units: usize) -> BatchNorm {
        BatchNorm {
            gamma: Array1::ones(units),
            beta: Array1::zeros(units),
            running_mean: Array1::zeros(units),
            running_var: Array1::ones(units),
            initialized: false,
        }
    }

    pub fn units(&self) -> usize {
        self.gamma.len()
    }

    pub fn zeros_like(&self) -> BatchNormGrads {
        BatchNormGrads {
            gamma: Array1::zeros(self.gamma.raw_dim()),
            beta: Array1::zeros(self.beta.raw_dim()),
        }
    }

    /// Normalizes with batch statistics (biased variance). Updates running
    /// stats with momentum when `update_running` is set.
    pub fn forward_train(&mut self, x: &Array2<f64>, update_running: bool) -> (Array2<f64>, BnCache) {
        let mean = x.mean_axis(Axis(0)).expect("nonempty batch");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty batch");
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let x_hat = &centered * &inv_std;
        let out = &x_hat * &self.gamma + &self.beta;

        if update_running {
            self.running_mean = &self.running_mean * BN_MOMENTUM + &(&mean * (1.0 - BN_MOMENTUM));
            self.running_var = &self.running_var * BN_MOMENTUM + &(&var * (1.0 - BN_MOMENTUM));
            self.initialized = true;
        }
        (out, BnCache { x_hat, inv_std })
    }

    /// Normalizes with running statistics; batch composition cannot affect
    /// the result.
    pub fn forward_infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if !self.initialized {
            return Err(Error::UninitializedBatchNorm);
        }
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let x_hat = (x - &self.running_mean) * &inv_std;
        Ok(&x_hat * &self.gamma + &self.beta)
    }

    /// Backward through the train-mode normalization.
    pub fn backward(
        &self,
        cache: &BnCache,
        dy: &Array2<f64>,
        grads: &mut BatchNormGrads,
    ) -> Array2<f64> {
        grads.gamma += &(dy * &cache.x_hat).sum_axis(Axis(0));
        grads.beta += &dy.sum_axis(Axis(0));

        let dx_hat = dy * &self.gamma;
        let mean_dx_hat = dx_hat.mean_axis(Axis(0)).expect("nonempty batch");
        let mean_dx_hat_xhat = (&dx_hat * &cache.x_hat)
            .mean_axis(Axis(0))
            .expect("nonempty batch");
        let correction = &dx_hat - &mean_dx_hat - &(&cache.x_hat * &mean_dx_hat_xhat);
        correction * &cache.inv_std
    }

    /// Marks running stats as usable without training; only benchmarks with
    /// untrained weights need this.
    pub fn force_initialized(&mut self) {
        self.initialized = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn train_output_is_standardized() {
        let mut rng = stream(1, "bn", 0);
        let x = Array2::from_shape_fn((64, 5), |_| rng.gen::<f64>() * 3.0 + 2.0);
        let mut bn = BatchNorm::new(5);
        let (y, _) = bn.forward_train(&x, true);
        let mean = y.mean_axis(Axis(0)).unwrap();
        let var = y.mapv(|v| v * v).mean_axis(Axis(0)).unwrap();
        for j in 0..5 {
            assert!(mean[j].abs() < 1e-10);
            assert!((var[j] - mean[j] * mean[j] - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn infer_before_training_fails() {
        let bn = BatchNorm::new(3);
        let x = Array2::zeros((2, 3));
        assert!(bn.forward_infer(&x).is_err());
    }

    #[test]
    fn infer_is_elementwise_affine() {
        let mut bn = BatchNorm::new(3);
        let mut rng = stream(2, "bn", 0);
        let x = Array2::from_shape_fn((32, 3), |_| rng.gen::<f64>());
        bn.forward_train(&x, true);

        let batch = Array2::from_shape_fn((8, 3), |_| rng.gen::<f64>());
        let full = bn.forward_infer(&batch).unwrap();
        for r in 0..8 {
            let single = bn
                .forward_infer(&batch.slice(ndarray::s![r..r + 1, ..]).to_owned())
                .unwrap();
            for j in 0..3 {
                assert!((full[(r, j)] - single[(0, j)]).abs() <= 1e-12);
            }
        }
    }
}

//! Fully connected layer.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::init::{uniform_bias, uniform_fan_in};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn init<R: Rng>(input: usize, output: usize, rng: &mut R) -> Dense {
        Dense {
            w: uniform_fan_in(output, input, input, rng),
            b: uniform_bias(output, input, rng),
        }
    }

    pub fn zeros_like(&self) -> DenseGrads {
        DenseGrads {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    /// `x W^T + b` over a batch.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.w.t());
        z += &self.b;
        z
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&self, x: &Array2<f64>, dz: &Array2<f64>, grads: &mut DenseGrads) -> Array2<f64> {
        grads.w += &dz.t().dot(x);
        grads.b += &dz.sum_axis(Axis(0));
        dz.dot(&self.w)
    }
}

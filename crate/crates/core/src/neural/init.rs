//! Weight initialization helpers.

use ndarray::{Array1, Array2};
use rand::Rng;

/// Uniform init on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn uniform_fan_in<R: Rng>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound))
}

/// Uniform bias init on the same fan-in bound.
pub fn uniform_bias<R: Rng>(len: usize, fan_in: usize, rng: &mut R) -> Array1<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array1::from_shape_fn(len, |_| rng.gen_range(-bound..=bound))
}

//! Batched LSTM layer: forward steps with cached activations and the
//! matching backward-through-time step.
//!
//! Gate blocks are stacked along the second weight axis in the fixed order
//! input, forget, cell candidate, output. For hidden width `h` the combined
//! pre-activation is `z = x W^T + h_prev U^T + b` with `W: 4h x d`,
//! `U: 4h x h`, `b: 4h`.

use ndarray::{s, Array1, Array2, Axis};

use super::init::uniform_fan_in;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// Input weights, `4h x d`.
    pub w: Array2<f64>,
    /// Recurrent weights, `4h x h`.
    pub u: Array2<f64>,
    /// Gate biases, `4h`.
    pub b: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

/// Activations of one time step needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub gate_i: Array2<f64>,
    pub gate_f: Array2<f64>,
    pub gate_g: Array2<f64>,
    pub gate_o: Array2<f64>,
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LstmLayer {
    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.ncols()
    }

    /// Fan-in uniform init with the forget-gate bias lifted to +1.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> LstmLayer {
        let w = uniform_fan_in(4 * hidden, input, input, rng);
        let u = uniform_fan_in(4 * hidden, hidden, hidden, rng);
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmLayer { w, u, b }
    }

    pub fn zeros_like(&self) -> LstmGrads {
        LstmGrads {
            w: Array2::zeros(self.w.raw_dim()),
            u: Array2::zeros(self.u.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    /// One forward step over a batch. Returns `(h, c)` and caches everything
    /// the backward pass needs.
    pub fn step(
        &self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>, LstmStepCache) {
        let h = self.hidden_dim();
        debug_assert_eq!(x.ncols(), self.input_dim());
        let mut z = x.dot(&self.w.t()) + h_prev.dot(&self.u.t());
        z += &self.b;

        let gate_i = z.slice(s![.., 0..h]).mapv(sigmoid);
        let gate_f = z.slice(s![.., h..2 * h]).mapv(sigmoid);
        let gate_g = z.slice(s![.., 2 * h..3 * h]).mapv(f64::tanh);
        let gate_o = z.slice(s![.., 3 * h..4 * h]).mapv(sigmoid);

        let c = &gate_f * c_prev + &gate_i * &gate_g;
        let tanh_c = c.mapv(f64::tanh);
        let h_t = &gate_o * &tanh_c;

        let cache = LstmStepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            c: c.clone(),
            tanh_c,
        };
        (h_t, c, cache)
    }

    /// Backward through one step.
    ///
    /// `dh` and `dc` are the gradients flowing into this step's outputs.
    /// Returns `(dx, dh_prev, dc_prev)` and accumulates parameter gradients.
    pub fn step_backward(
        &self,
        cache: &LstmStepCache,
        dh: &Array2<f64>,
        dc_in: &Array2<f64>,
        grads: &mut LstmGrads,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let h = self.hidden_dim();
        let b = dh.nrows();

        let d_o = dh * &cache.tanh_c;
        let dz_o = &d_o * &cache.gate_o * &cache.gate_o.mapv(|v| 1.0 - v);

        let dc = dc_in + &(dh * &cache.gate_o * &cache.tanh_c.mapv(|v| 1.0 - v * v));

        let d_f = &dc * &cache.c_prev;
        let dz_f = &d_f * &cache.gate_f * &cache.gate_f.mapv(|v| 1.0 - v);

        let d_i = &dc * &cache.gate_g;
        let dz_i = &d_i * &cache.gate_i * &cache.gate_i.mapv(|v| 1.0 - v);

        let d_g = &dc * &cache.gate_i;
        let dz_g = &d_g * &cache.gate_g.mapv(|v| 1.0 - v * v);

        let dc_prev = &dc * &cache.gate_f;

        let mut dz = Array2::zeros((b, 4 * h));
        dz.slice_mut(s![.., 0..h]).assign(&dz_i);
        dz.slice_mut(s![.., h..2 * h]).assign(&dz_f);
        dz.slice_mut(s![.., 2 * h..3 * h]).assign(&dz_g);
        dz.slice_mut(s![.., 3 * h..4 * h]).assign(&dz_o);

        grads.w += &dz.t().dot(&cache.x);
        grads.u += &dz.t().dot(&cache.h_prev);
        grads.b += &dz.sum_axis(Axis(0));

        let dx = dz.dot(&self.w);
        let dh_prev = dz.dot(&self.u);
        (dx, dh_prev, dc_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::Array2;
    use rand::Rng;

    fn random_layer(input: usize, hidden: usize, seed: u64) -> LstmLayer {
        LstmLayer::init(input, hidden, &mut stream(seed, "lstm-test", 0))
    }

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed, "lstm-batch", 0);
        Array2::from_shape_fn((rows, cols), |_| rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn zero_everything_gives_zero_state() {
        let layer = LstmLayer {
            w: Array2::zeros((8, 3)),
            u: Array2::zeros((8, 2)),
            b: Array1::zeros(8),
        };
        let x = Array2::zeros((4, 3));
        let h0 = Array2::zeros((4, 2));
        let c0 = Array2::zeros((4, 2));
        let (h, c, _) = layer.step(&x, &h0, &c0);
        assert!(h.iter().all(|&v| v == 0.0));
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_carries_cell_state() {
        let hidden = 3;
        let mut layer = LstmLayer {
            w: Array2::zeros((4 * hidden, 2)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        };
        // input gate shut, forget gate saturated open
        layer.b.slice_mut(s![0..hidden]).fill(-50.0);
        layer.b.slice_mut(s![hidden..2 * hidden]).fill(50.0);
        let x = random_batch(2, 2, 1);
        let h0 = Array2::zeros((2, hidden));
        let c0 = random_batch(2, hidden, 2);
        let (_, c, _) = layer.step(&x, &h0, &c0);
        for (a, b) in c.iter().zip(c0.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn hidden_state_is_bounded() {
        let layer = random_layer(5, 4, 3);
        let x = random_batch(6, 5, 4) * 30.0;
        let h0 = random_batch(6, 4, 5);
        let c0 = random_batch(6, 4, 6) * 10.0;
        let (h, _, _) = layer.step(&x, &h0, &c0);
        assert!(h.iter().all(|&v| v.abs() < 1.0));
    }

    /// Scalar-loop reference implementation of the cell, independent of the
    /// vectorized path.
    fn naive_step(
        layer: &LstmLayer,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let hdim = layer.hidden_dim();
        let b = x.nrows();
        let mut h_out = Array2::zeros((b, hdim));
        let mut c_out = Array2::zeros((b, hdim));
        for r in 0..b {
            for j in 0..hdim {
                let mut pre = [0.0f64; 4];
                for (gate, p) in pre.iter_mut().enumerate() {
                    let row = gate * hdim + j;
                    let mut acc = layer.b[row];
                    for k in 0..layer.input_dim() {
                        acc += layer.w[(row, k)] * x[(r, k)];
                    }
                    for k in 0..hdim {
                        acc += layer.u[(row, k)] * h_prev[(r, k)];
                    }
                    *p = acc;
                }
                let i = 1.0 / (1.0 + (-pre[0]).exp());
                let f = 1.0 / (1.0 + (-pre[1]).exp());
                let g = pre[2].tanh();
                let o = 1.0 / (1.0 + (-pre[3]).exp());
                let c = f * c_prev[(r, j)] + i * g;
                c_out[(r, j)] = c;
                h_out[(r, j)] = o * c.tanh();
            }
        }
        (h_out, c_out)
    }

    #[test]
    fn matches_scalar_loop_reference() {
        let layer = random_layer(5, 4, 7);
        let x = random_batch(3, 5, 8);
        let h0 = random_batch(3, 4, 9);
        let c0 = random_batch(3, 4, 10);
        let (h, c, _) = layer.step(&x, &h0, &c0);
        let (h_ref, c_ref) = naive_step(&layer, &x, &h0, &c0);
        for (a, b) in h.iter().zip(h_ref.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in c.iter().zip(c_ref.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

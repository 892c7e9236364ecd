//! Adam optimizer over the model's flat tensor list.

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment state, one buffer per model tensor in manifest order.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: usize,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, tensor_lens: &[usize]) -> AdamState {
        AdamState {
            cfg,
            step: 0,
            m: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected update:
    /// `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "tensor count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count changed");
        self.step += 1;
        let t = self.step as i32;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let corr1 = 1.0 - b1.powi(t);
        let corr2 = 1.0 - b2.powi(t);
        for ((theta, grad), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(theta.len(), m.len(), "tensor length changed");
            assert_eq!(grad.len(), m.len(), "gradient length changed");
            for i in 0..m.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + self.cfg.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut state = AdamState::new(AdamConfig::default(), &[3]);
        let mut theta = vec![1.0, -2.0, 0.5];
        let grads = vec![0.0; 3];
        // prime moments with one nonzero step first
        state.step(&mut [&mut theta], &[&[1.0, 1.0, 1.0]], 0.01);
        let snapshot = theta.clone();
        state.step(&mut [&mut theta], &[&grads], 0.01);
        // moments decay but the zero gradient still nudges against the decayed
        // first moment; with a fresh state parameters stay put exactly
        let mut fresh = AdamState::new(AdamConfig::default(), &[3]);
        let mut theta2 = vec![1.0, -2.0, 0.5];
        fresh.step(&mut [&mut theta2], &[&grads], 0.01);
        assert_eq!(theta2, vec![1.0, -2.0, 0.5]);
        assert_ne!(snapshot, theta); // decayed momentum keeps moving
    }

    #[test]
    fn first_step_is_learning_rate_sized() {
        let mut state = AdamState::new(AdamConfig::default(), &[1]);
        let mut theta = vec![0.0];
        state.step(&mut [&mut theta], &[&[1.0]], 0.01);
        // bias correction makes m_hat = v_hat = 1 at t = 1
        assert!((theta[0] + 0.01).abs() < 1e-9, "got {}", theta[0]);
    }

    #[test]
    fn first_step_direction_is_negative_gradient_sign() {
        let mut state = AdamState::new(AdamConfig::default(), &[4]);
        let mut theta = vec![0.0; 4];
        let grads = [0.3, -2.0, 5.0, -0.001];
        state.step(&mut [&mut theta], &[&grads], 0.01);
        for (t, g) in theta.iter().zip(grads.iter()) {
            assert_eq!(t.signum(), -g.signum());
            assert!((t.abs() - 0.01).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_given_inputs() {
        let run = || {
            let mut state = AdamState::new(AdamConfig::default(), &[2]);
            let mut theta = vec![0.2, -0.4];
            for k in 0..10 {
                let g = [0.1 * k as f64, -0.05];
                state.step(&mut [&mut theta], &[&g], 0.01);
            }
            theta
        };
        assert_eq!(run(), run());
    }
}

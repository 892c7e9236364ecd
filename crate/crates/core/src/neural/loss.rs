//! Training objectives: multi-label binary cross-entropy (with and without
//! the complement term) and single-label softmax cross-entropy.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Probability clamp that keeps the logs finite.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `-(1/B) sum_b sum_q [t ln y + (1-t) ln(1-y)]` over sigmoid outputs.
    MultiLabelBce,
    /// Positive-term-only variant `-(1/B) sum_b sum_q t ln y`; kept for
    /// ablation. Its minimizer saturates every output at 1.
    MultiLabelBcePositiveOnly,
    /// Softmax + categorical cross-entropy against the single best codeword.
    SingleLabelSoftmax,
}

impl LossKind {
    pub fn uses_softmax(self) -> bool {
        matches!(self, LossKind::SingleLabelSoftmax)
    }
}

/// Training targets for one batch.
pub enum Targets<'a> {
    /// `B x Q` multi-hot matrix of 0/1 values.
    MultiHot(&'a Array2<f64>),
    /// Best codeword index per batch row.
    Classes(&'a [usize]),
}

fn clamp(y: f64) -> f64 {
    y.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean-over-batch, sum-over-outputs loss.
pub fn compute_loss(kind: LossKind, probs: &Array2<f64>, targets: &Targets) -> f64 {
    let b = probs.nrows() as f64;
    match (kind, targets) {
        (LossKind::MultiLabelBce, Targets::MultiHot(t)) => {
            assert_eq!(probs.dim(), t.dim(), "probability/target shape mismatch");
            let mut acc = 0.0;
            for (&y, &t) in probs.iter().zip(t.iter()) {
                let y = clamp(y);
                acc -= t * y.ln() + (1.0 - t) * (1.0 - y).ln();
            }
            acc / b
        }
        (LossKind::MultiLabelBcePositiveOnly, Targets::MultiHot(t)) => {
            assert_eq!(probs.dim(), t.dim(), "probability/target shape mismatch");
            let mut acc = 0.0;
            for (&y, &t) in probs.iter().zip(t.iter()) {
                acc -= t * clamp(y).ln();
            }
            acc / b
        }
        (LossKind::SingleLabelSoftmax, Targets::Classes(classes)) => {
            assert_eq!(probs.nrows(), classes.len(), "batch size mismatch");
            let mut acc = 0.0;
            for (row, &class) in probs.outer_iter().zip(classes.iter()) {
                acc -= clamp(row[class]).ln();
            }
            acc / b
        }
        _ => panic!("loss kind and target representation disagree"),
    }
}

/// Gradient of the loss with respect to the output-layer pre-activations.
///
/// For sigmoid + full BCE this is `(y - t)/B`; for the positive-only variant
/// `-t (1 - y)/B`; for softmax cross-entropy `(p - onehot)/B`.
pub fn loss_grad_logits(kind: LossKind, probs: &Array2<f64>, targets: &Targets) -> Array2<f64> {
    let b = probs.nrows() as f64;
    match (kind, targets) {
        (LossKind::MultiLabelBce, Targets::MultiHot(t)) => (probs - *t) / b,
        (LossKind::MultiLabelBcePositiveOnly, Targets::MultiHot(t)) => {
            let mut g = Array2::zeros(probs.raw_dim());
            ndarray::Zip::from(&mut g)
                .and(probs)
                .and(*t)
                .for_each(|g, &y, &t| *g = -t * (1.0 - y) / b);
            g
        }
        (LossKind::SingleLabelSoftmax, Targets::Classes(classes)) => {
            let mut g = probs / b;
            for (row, &class) in g.outer_iter_mut().zip(classes.iter()) {
                let mut row = row;
                row[class] -= 1.0 / b;
            }
            g
        }
        _ => panic!("loss kind and target representation disagree"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bce_uniform_prediction() {
        let probs = array![[0.5, 0.5]];
        let t = array![[1.0, 0.0]];
        let loss = compute_loss(LossKind::MultiLabelBce, &probs, &Targets::MultiHot(&t));
        assert!((loss - 2.0 * 0.5f64.ln().abs()).abs() < 1e-12);
        assert!((loss - 1.38629).abs() < 1e-5);
    }

    #[test]
    fn bce_perfect_prediction_is_zero() {
        let probs = array![[1.0, 0.0, 1.0]];
        let t = array![[1.0, 0.0, 1.0]];
        let loss = compute_loss(LossKind::MultiLabelBce, &probs, &Targets::MultiHot(&t));
        // clamp keeps the logs finite; result is ~1e-12 rather than exactly 0
        assert!(loss >= 0.0 && loss < 1e-10);
    }

    #[test]
    fn bce_is_nonnegative() {
        let probs = array![[0.2, 0.9], [0.7, 0.4]];
        let t = array![[0.0, 1.0], [1.0, 1.0]];
        assert!(compute_loss(LossKind::MultiLabelBce, &probs, &Targets::MultiHot(&t)) > 0.0);
    }

    #[test]
    fn logit_gradient_matches_y_minus_t_over_b() {
        let probs = array![[0.3, 0.8], [0.6, 0.1]];
        let t = array![[0.0, 1.0], [1.0, 0.0]];
        let g = loss_grad_logits(LossKind::MultiLabelBce, &probs, &Targets::MultiHot(&t));
        for r in 0..2 {
            for q in 0..2 {
                assert!((g[(r, q)] - (probs[(r, q)] - t[(r, q)]) / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn positive_only_ignores_negatives() {
        let probs = array![[0.3, 0.8]];
        let t = array![[0.0, 1.0]];
        let loss =
            compute_loss(LossKind::MultiLabelBcePositiveOnly, &probs, &Targets::MultiHot(&t));
        assert!((loss + 0.8f64.ln()).abs() < 1e-12);
        let g = loss_grad_logits(LossKind::MultiLabelBcePositiveOnly, &probs, &Targets::MultiHot(&t));
        assert_eq!(g[(0, 0)], 0.0);
        assert!(g[(0, 1)] < 0.0);
    }

    #[test]
    fn softmax_loss_and_gradient() {
        let probs = array![[0.7, 0.2, 0.1]];
        let classes = [0usize];
        let loss = compute_loss(LossKind::SingleLabelSoftmax, &probs, &Targets::Classes(&classes));
        assert!((loss + 0.7f64.ln()).abs() < 1e-12);
        let g = loss_grad_logits(LossKind::SingleLabelSoftmax, &probs, &Targets::Classes(&classes));
        assert!((g[(0, 0)] - (0.7 - 1.0)).abs() < 1e-12);
        assert!((g[(0, 1)] - 0.2).abs() < 1e-12);
    }
}

use super::matrix::Matrix;
use crate::{Error, Result};

/// Mean over rows of the squared l2 norm of the row difference, with its
/// exact gradient with respect to `pred`.
pub fn loss_mse(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::ShapeMismatch("mse operand shapes".into()));
    }
    let n = pred.rows() as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for r in 0..pred.rows() {
        for c in 0..pred.cols() {
            let d = pred.get(r, c) - target.get(r, c);
            value += d * d;
            grad.set(r, c, 2.0 * d / n);
        }
    }
    Ok((value / n, grad))
}

/// Mean negative log-likelihood of `labels` under `probs` (softmax outputs),
/// with the gradient in softmax-combined form: (probs - one_hot) / batch.
/// The gradient is with respect to the final-layer logits.
pub fn loss_cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if probs.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability rows vs {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    let k = probs.cols();
    let n = probs.rows() as f64;
    let mut value = 0.0;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    for (r, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::LabelOutOfRange { label, classes: k });
        }
        // Floor away from zero so degenerate rows yield a finite loss.
        value -= probs.get(r, label).max(1e-300).ln();
        for c in 0..k {
            let one_hot = if c == label { 1.0 } else { 0.0 };
            grad.set(r, c, (probs.get(r, c) - one_hot) / n);
        }
    }
    Ok((value / n, grad))
}

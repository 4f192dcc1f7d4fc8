use super::Matrix;
use crate::error::{Error, Result};

/// Numerically stable log-softmax of one row.
pub fn log_softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean softmax cross-entropy of `logits` against integer labels.
pub fn loss_ce(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let total: f64 = logits
        .iter_rows()
        .zip(labels)
        .map(|(row, &y)| -log_softmax_row(row)[y])
        .sum();
    Ok(total / labels.len() as f64)
}

pub(crate) fn check_labels(logits: &Matrix, labels: &[usize]) -> Result<()> {
    if labels.len() != logits.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= logits.cols()) {
        return Err(Error::data(format!("label {bad} outside [0, {})", logits.cols())));
    }
    Ok(())
}

/// Loss value and its gradient with respect to the logits (mean reduction).
pub(crate) fn ce_with_grad(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    check_labels(logits, labels)?;
    let batch = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let logp = log_softmax_row(logits.row(i));
        total -= logp[y];
        let g = grad.row_mut(i);
        for (gk, lk) in g.iter_mut().zip(&logp) {
            *gk = lk.exp() / batch;
        }
        g[y] -= 1.0 / batch;
    }
    Ok((total / batch, grad))
}

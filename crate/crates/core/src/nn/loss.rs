use super::{NnError, Tensor};

/// Row-wise log-softmax of `[batch, classes]` with max subtraction.
pub fn log_softmax(logits: &Tensor) -> Result<Tensor, NnError> {
    let [_, classes] = logits.dims("log_softmax")?;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(classes) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|v| v - lse));
    }
    Tensor::new(logits.shape().to_vec(), out)
}

pub fn softmax(logits: &Tensor) -> Result<Tensor, NnError> {
    let [_, classes] = logits.dims("softmax")?;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(classes) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Mean negative log-likelihood and its gradient `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), NnError> {
    let [batch, classes] = logits.dims("softmax_cross_entropy")?;
    if labels.len() != batch {
        return Err(NnError::ShapeMismatch {
            op: "softmax_cross_entropy",
            detail: format!("{} labels for batch of {batch}", labels.len()),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(NnError::LabelOutOfRange { label, classes });
    }
    let logp = log_softmax(logits)?;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &label) in logp.data().chunks_exact(classes).zip(labels) {
        loss -= row[label];
        for (k, lp) in row.iter().enumerate() {
            let onehot = if k == label { 1.0 } else { 0.0 };
            grad.push((lp.exp() - onehot) / batch as f64);
        }
    }
    let loss = loss / batch as f64;
    if !loss.is_finite() {
        return Err(NnError::NonFinite {
            op: "softmax_cross_entropy",
        });
    }
    Ok((loss, Tensor::new(logits.shape().to_vec(), grad)?))
}

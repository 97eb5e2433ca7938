use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::{NnError, NnRng, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmOptions {
    /// Soft-margin penalty; the regularizer is `λ = 1 / (C·n)`.
    pub c: f64,
    /// Passes over the training set.
    pub epochs: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self { c: 1.0, epochs: 50 }
    }
}

/// One-vs-rest linear SVM over z-scored inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// `[classes, dim]` row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub options: SvmOptions,
    classes: usize,
}

impl SvmModel {
    pub fn untrained(dim: usize, classes: usize, options: SvmOptions) -> Self {
        Self {
            weights: vec![0.0; dim * classes],
            bias: vec![0.0; classes],
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            options,
            classes,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        let d = self.dim();
        (0..self.classes)
            .map(|k| {
                let w = &self.weights[k * d..(k + 1) * d];
                self.bias[k] + w.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        super::argmax(&self.decision_values(x))
    }

    pub(super) fn decision_batch(&self, batch: &Tensor) -> Result<Tensor, ModelError> {
        let [n, d] = batch.dims("svm")?;
        if d != self.dim() {
            return Err(ModelError::IncompatibleShape(format!(
                "svm expects dimension {}, got {d}",
                self.dim()
            )));
        }
        let mut out = Vec::with_capacity(n * self.classes);
        for row in batch.data().chunks_exact(d) {
            out.extend(self.decision_values(row));
        }
        Ok(Tensor::new(vec![n, self.classes], out)?)
    }

    pub fn state(&self) -> Vec<(String, Tensor)> {
        let d = self.dim();
        let t = |shape: Vec<usize>, v: &Vec<f64>| {
            Tensor::new(shape, v.clone()).expect("consistent svm shapes")
        };
        vec![
            ("svm.weight".into(), t(vec![self.classes, d], &self.weights)),
            ("svm.bias".into(), t(vec![self.classes], &self.bias)),
            ("svm.mean".into(), t(vec![d], &self.mean)),
            ("svm.scale".into(), t(vec![d], &self.scale)),
        ]
    }

    pub fn load_state(&mut self, state: &[(String, Tensor)]) -> Result<(), ModelError> {
        let expected = self.state();
        if state.len() != expected.len() {
            return Err(
                NnError::Checkpoint(format!("svm checkpoint has {} tensors", state.len())).into(),
            );
        }
        for ((name, t), (want, w)) in state.iter().zip(&expected) {
            if name != want || t.shape() != w.shape() {
                return Err(NnError::Checkpoint(format!(
                    "tensor {name} {:?} does not match {want}",
                    t.shape()
                ))
                .into());
            }
        }
        self.weights = state[0].1.data().to_vec();
        self.bias = state[1].1.data().to_vec();
        self.mean = state[2].1.data().to_vec();
        self.scale = state[3].1.data().to_vec();
        Ok(())
    }
}

/// Train one binary SVM per class on the L2-regularized hinge loss by
/// stochastic subgradient descent with step `1/(λt)`, returning the iterate
/// average over the second half of the run.
pub fn svm_train(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    options: &SvmOptions,
    seed: u64,
) -> Result<SvmModel, ModelError> {
    let n = x.len();
    if n != y.len() || n == 0 {
        return Err(ModelError::IncompatibleShape(format!(
            "{n} vectors for {} labels",
            y.len()
        )));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(ModelError::IncompatibleShape(format!(
            "ragged input: {} vs {d}",
            row.len()
        )));
    }
    if let Some(&label) = y.iter().find(|&&l| l >= classes) {
        return Err(NnError::LabelOutOfRange { label, classes }.into());
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ModelError::DegenerateLabels);
    }

    let mut model = SvmModel::untrained(d, classes, options.clone());
    for j in 0..d {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        model.mean[j] = mean;
        model.scale[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    // bias folded in as a constant last feature
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut v = model.standardize(r);
            v.push(1.0);
            v
        })
        .collect();

    let lambda = 1.0 / (options.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let total = options.epochs * n;
    let average_from = total / 2;
    let mut w = vec![vec![0.0; d + 1]; classes];
    let mut avg = vec![vec![0.0; d + 1]; classes];
    let mut rng = NnRng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            for (k, wk) in w.iter_mut().enumerate() {
                let target = if y[i] == k { 1.0 } else { -1.0 };
                let margin = target * wk.iter().zip(&z[i]).map(|(a, b)| a * b).sum::<f64>();
                let shrink = 1.0 - eta * lambda;
                wk.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (v, zi) in wk.iter_mut().zip(&z[i]) {
                        *v += eta * target * zi;
                    }
                }
                let norm = wk.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > radius {
                    let s = radius / norm;
                    wk.iter_mut().for_each(|v| *v *= s);
                }
                if t > average_from {
                    for (a, v) in avg[k].iter_mut().zip(wk.iter()) {
                        *a += v;
                    }
                }
            }
        }
    }
    let count = (total - average_from) as f64;
    for (k, a) in avg.iter().enumerate() {
        model.weights[k * d..(k + 1) * d]
            .copy_from_slice(&a[..d].iter().map(|v| v / count).collect::<Vec<_>>());
        model.bias[k] = a[d] / count;
    }
    Ok(model)
}

use super::layer::shape_err;
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

pub const BN_EPS: f64 = 1e-5;
/// Weight kept on the old running statistic at every update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Batch normalization over the feature axis of `[batch, features]`.
///
/// Running statistics track the biased batch variance.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Param,
    pub running_var: Param,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
    batch: usize,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Param::new("gamma", Tensor::full(&[features], 1.0)),
            beta: Param::new("beta", Tensor::zeros(&[features])),
            running_mean: Param::buffer("running_mean", Tensor::zeros(&[features])),
            running_var: Param::buffer("running_var", Tensor::full(&[features], 1.0)),
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.len()
    }
}

impl Layer for BatchNorm {
    fn kind(&self) -> &'static str {
        "batchnorm"
    }

    fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, f] = x.dims("batchnorm")?;
        if f != self.features() {
            return Err(shape_err(
                "batchnorm",
                format!("expected {} features, got {f}", self.features()),
            ));
        }
        let (mean, var) = match mode {
            Mode::Train => {
                if batch < 2 {
                    return Err(NnError::BatchTooSmall(batch));
                }
                let mut mean = vec![0.0; f];
                for row in x.data().chunks_exact(f) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= batch as f64);
                let mut var = vec![0.0; f];
                for row in x.data().chunks_exact(f) {
                    for j in 0..f {
                        var[j] += (row[j] - mean[j]).powi(2);
                    }
                }
                var.iter_mut().for_each(|v| *v /= batch as f64);
                for j in 0..f {
                    let rm = &mut self.running_mean.value.data_mut()[j];
                    *rm = BN_MOMENTUM * *rm + (1.0 - BN_MOMENTUM) * mean[j];
                    let rv = &mut self.running_var.value.data_mut()[j];
                    *rv = BN_MOMENTUM * *rv + (1.0 - BN_MOMENTUM) * var[j];
                }
                (mean, var)
            }
            Mode::Eval => (
                self.running_mean.value.data().to_vec(),
                self.running_var.value.data().to_vec(),
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut normalized = Vec::with_capacity(x.len());
        let mut y = Vec::with_capacity(x.len());
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        for row in x.data().chunks_exact(f) {
            for j in 0..f {
                let n = (row[j] - mean[j]) * inv_std[j];
                normalized.push(n);
                y.push(g[j] * n + b[j]);
            }
        }
        self.cache = Some(Cache {
            normalized,
            inv_std,
            mode,
            batch,
        });
        Tensor::new(vec![batch, f], y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(NnError::NoForwardCache("batchnorm"))?;
        let f = self.features();
        let batch = cache.batch;
        if grad_out.shape() != [batch, f] {
            return Err(shape_err(
                "batchnorm backward",
                format!("grad shape {:?}", grad_out.shape()),
            ));
        }
        let mut sum_dy = vec![0.0; f];
        let mut sum_dy_n = vec![0.0; f];
        for (dy, n) in grad_out
            .data()
            .chunks_exact(f)
            .zip(cache.normalized.chunks_exact(f))
        {
            for j in 0..f {
                sum_dy[j] += dy[j];
                sum_dy_n[j] += dy[j] * n[j];
            }
        }
        for j in 0..f {
            self.gamma.grad.data_mut()[j] += sum_dy_n[j];
            self.beta.grad.data_mut()[j] += sum_dy[j];
        }
        let g = self.gamma.value.data();
        let nb = batch as f64;
        let mut dx = Vec::with_capacity(grad_out.len());
        for (dy, n) in grad_out
            .data()
            .chunks_exact(f)
            .zip(cache.normalized.chunks_exact(f))
        {
            for j in 0..f {
                let scale = g[j] * cache.inv_std[j];
                dx.push(match cache.mode {
                    Mode::Train => scale / nb * (nb * dy[j] - sum_dy[j] - n[j] * sum_dy_n[j]),
                    Mode::Eval => scale * dy[j],
                });
            }
        }
        Tensor::new(vec![batch, f], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [n] if *n == self.features() => Ok(vec![*n]),
            _ => Err(shape_err("batchnorm", format!("input {input:?}"))),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![
            &self.gamma,
            &self.beta,
            &self.running_mean,
            &self.running_var,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn batch() -> Tensor {
        // spread large enough that ε = 1e-5 shifts the variance by < 1e-6
        Tensor::from_fn(&[8, 3], |i| {
            20.0 * (((i * 7 + 3) % 11) as f64 * 0.3 - 1.0 + (i % 3) as f64)
        })
    }

    fn moments(y: &Tensor, j: usize) -> (f64, f64) {
        let col: Vec<f64> = y.data().chunks_exact(3).map(|r| r[j]).collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / col.len() as f64;
        (m, v)
    }

    #[test]
    fn train_mode_standardizes() {
        let mut bn = BatchNorm::new(3);
        let y = bn
            .forward(&batch(), Mode::Train, &mut NnRng::seed_from_u64(0))
            .unwrap();
        for j in 0..3 {
            let (m, v) = moments(&y, j);
            assert!(m.abs() < 1e-6 && (v - 1.0).abs() < 1e-6, "{m} {v}");
        }
    }

    #[test]
    fn affine_postscale() {
        let mut bn = BatchNorm::new(3);
        bn.gamma.value.fill(2.0);
        bn.beta.value.fill(1.0);
        let y = bn
            .forward(&batch(), Mode::Train, &mut NnRng::seed_from_u64(0))
            .unwrap();
        for j in 0..3 {
            let (m, v) = moments(&y, j);
            assert!((m - 1.0).abs() < 1e-6 && (v - 4.0).abs() < 1e-6, "{m} {v}");
        }
    }

    #[test]
    fn single_sample_train_batch_is_rejected() {
        let mut bn = BatchNorm::new(3);
        assert!(matches!(
            bn.forward(
                &Tensor::zeros(&[1, 3]),
                Mode::Train,
                &mut NnRng::seed_from_u64(0)
            ),
            Err(NnError::BatchTooSmall(1))
        ));
        assert!(bn
            .forward(
                &Tensor::zeros(&[1, 3]),
                Mode::Eval,
                &mut NnRng::seed_from_u64(0)
            )
            .is_ok());
    }

    #[test]
    fn running_stats_use_momentum() {
        let mut bn = BatchNorm::new(1);
        let x = Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap();
        bn.forward(&x, Mode::Train, &mut NnRng::seed_from_u64(0))
            .unwrap();
        assert!((bn.running_mean.value.data()[0] - 0.2).abs() < 1e-15);
        assert!((bn.running_var.value.data()[0] - (0.9 + 0.1)).abs() < 1e-15);
    }
}

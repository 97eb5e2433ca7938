use serde::{Deserialize, Serialize};

use super::{NnError, Param};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

/// Optimizer state bound to a fixed ordered list of trainable parameters.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        assert!(learning_rate > 0.0, "learning rate must be positive");
        Self {
            kind,
            learning_rate,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Apply one update from the accumulated gradients. Non-trainable params are skipped.
    pub fn step(&mut self, params: Vec<&mut Param>) -> Result<(), NnError> {
        let mut params: Vec<&mut Param> = params.into_iter().filter(|p| p.trainable).collect();
        for p in &params {
            if p.value.shape() != p.grad.shape() {
                return Err(NnError::ShapeMismatch {
                    op: "optimizer",
                    detail: format!(
                        "{}: value {:?} vs grad {:?}",
                        p.name,
                        p.value.shape(),
                        p.grad.shape()
                    ),
                });
            }
        }
        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for p in params.iter_mut() {
                    let g = p.grad.data().to_vec();
                    for (v, g) in p.value.data_mut().iter_mut().zip(g) {
                        *v -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.first_moment.is_empty() {
                    self.first_moment = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
                    self.second_moment = self.first_moment.clone();
                }
                if self.first_moment.len() != params.len()
                    || self
                        .first_moment
                        .iter()
                        .zip(&params)
                        .any(|(m, p)| m.len() != p.value.len())
                {
                    return Err(NnError::ShapeMismatch {
                        op: "optimizer",
                        detail: "parameter set changed between steps".into(),
                    });
                }
                let t = self.step as i32;
                let bc1 = 1.0 - ADAM_BETA1.powi(t);
                let bc2 = 1.0 - ADAM_BETA2.powi(t);
                for ((p, m), s) in params
                    .iter_mut()
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    let grad = p.grad.data().to_vec();
                    for (((v, g), m), s) in p
                        .value
                        .data_mut()
                        .iter_mut()
                        .zip(grad)
                        .zip(m.iter_mut())
                        .zip(s.iter_mut())
                    {
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *s = ADAM_BETA2 * *s + (1.0 - ADAM_BETA2) * g * g;
                        let m_hat = *m / bc1;
                        let s_hat = *s / bc2;
                        *v -= lr * m_hat / (s_hat.sqrt() + ADAM_EPS);
                    }
                }
            }
        }
        Ok(())
    }
}

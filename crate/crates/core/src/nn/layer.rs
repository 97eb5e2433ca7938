use std::fmt::Debug;

use super::{NnError, Tensor};

/// Random source threaded through every stochastic op.
pub type NnRng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A named tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Running statistics are stored as non-trainable params so they checkpoint alongside weights.
    pub trainable: bool,
}

impl Param {
    pub fn new(name: &str, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.to_string(),
            value,
            grad,
            trainable: true,
        }
    }

    pub fn buffer(name: &str, value: Tensor) -> Self {
        Self {
            trainable: false,
            ..Self::new(name, value)
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// One differentiable stage. Shapes include the leading batch axis.
pub trait Layer: Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut NnRng) -> Result<Tensor, NnError>;

    /// Given dL/dy, accumulate parameter gradients and return dL/dx.
    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError>;

    /// Per-sample output shape for a per-sample input shape.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    /// Attention distribution of the last forward pass, `[batch, time]`.
    fn attention_weights(&self) -> Option<&Tensor> {
        None
    }
}

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> NnError {
    NnError::ShapeMismatch {
        op,
        detail: detail.into(),
    }
}

use rand::Rng;

use super::layer::shape_err;
use super::{Layer, Mode, NnError, NnRng, Tensor};

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
    shape: Vec<usize>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Relu {
    fn kind(&self) -> &'static str {
        "relu"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let mask: Vec<bool> = x.data().iter().map(|&v| v > 0.0).collect();
        let y = x.data().iter().map(|&v| v.max(0.0)).collect();
        self.mask = Some(mask);
        self.shape = x.shape().to_vec();
        Tensor::new(x.shape().to_vec(), y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let mask = self.mask.as_ref().ok_or(NnError::NoForwardCache("relu"))?;
        if grad_out.shape() != self.shape.as_slice() {
            return Err(shape_err(
                "relu backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let dx = grad_out
            .data()
            .iter()
            .zip(mask)
            .map(|(&g, &m)| if m { g } else { 0.0 })
            .collect();
        Tensor::new(self.shape.clone(), dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        Ok(input.to_vec())
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 − rate)` in train mode.
#[derive(Debug, Clone)]
pub struct Dropout {
    rate: f64,
    scale_mask: Option<Vec<f64>>,
    shape: Vec<usize>,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&rate),
            "dropout rate must lie in [0, 1)"
        );
        Self {
            rate,
            scale_mask: None,
            shape: Vec::new(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Layer for Dropout {
    fn kind(&self) -> &'static str {
        "dropout"
    }

    fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut NnRng) -> Result<Tensor, NnError> {
        self.shape = x.shape().to_vec();
        if mode == Mode::Eval || self.rate == 0.0 {
            self.scale_mask = None;
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| {
                if rng.random::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect();
        let y = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.scale_mask = Some(mask);
        Tensor::new(x.shape().to_vec(), y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        if grad_out.shape() != self.shape.as_slice() {
            return Err(shape_err(
                "dropout backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        match &self.scale_mask {
            None => Ok(grad_out.clone()),
            Some(mask) => Tensor::new(
                self.shape.clone(),
                grad_out
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(g, m)| g * m)
                    .collect(),
            ),
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        Ok(input.to_vec())
    }
}

/// Reinterpret each sample with a new per-sample shape (flatten, add a channel axis, ...).
#[derive(Debug, Clone)]
pub struct Reshape {
    target: Vec<usize>,
    input_shape: Vec<usize>,
}

impl Reshape {
    pub fn new(target: Vec<usize>) -> Self {
        Self {
            target,
            input_shape: Vec::new(),
        }
    }
}

impl Layer for Reshape {
    fn kind(&self) -> &'static str {
        "reshape"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let batch = *x
            .shape()
            .first()
            .ok_or_else(|| shape_err("reshape", "scalar input"))?;
        self.output_shape(&x.shape()[1..])?;
        self.input_shape = x.shape().to_vec();
        let mut shape = vec![batch];
        shape.extend_from_slice(&self.target);
        x.clone().reshape(shape)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        grad_out.clone().reshape(self.input_shape.clone())
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.iter().product::<usize>() == self.target.iter().product::<usize>() {
            Ok(self.target.clone())
        } else {
            Err(shape_err(
                "reshape",
                format!("{input:?} cannot become {:?}", self.target),
            ))
        }
    }
}

use super::layer::shape_err;
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

/// A sequential stack of layers over a fixed per-sample input shape.
#[derive(Debug)]
pub struct Network {
    layers: Vec<Box<dyn Layer>>,
    input_shape: Vec<usize>,
}

impl Network {
    /// Assemble a stack, validating shape propagation end to end.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Box<dyn Layer>>) -> Result<Self, NnError> {
        let net = Self {
            layers,
            input_shape,
        };
        net.shape_trace()?;
        Ok(net)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Box<dyn Layer>] {
        &mut self.layers
    }

    /// Per-sample shape after every layer, starting with the input shape.
    pub fn shape_trace(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shapes = vec![self.input_shape.clone()];
        for layer in &self.layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>, NnError> {
        Ok(self.shape_trace()?.pop().unwrap())
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut NnRng) -> Result<Tensor, NnError> {
        if x.shape().get(1..) != Some(self.input_shape.as_slice()) {
            return Err(shape_err(
                "network",
                format!(
                    "input {:?} does not match [batch, {:?}]",
                    x.shape(),
                    self.input_shape
                ),
            ));
        }
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h, mode, rng)?;
            h.check_finite(layer.kind())?;
        }
        Ok(h)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor, NnError> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
            g.check_finite(layer.kind())?;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .collect()
    }

    pub fn trainable_parameter_count(&self) -> usize {
        self.params()
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    /// Attention weights of the last forward pass, if any layer produces them.
    pub fn attention_weights(&self) -> Option<&Tensor> {
        self.layers.iter().find_map(|l| l.attention_weights())
    }

    /// Every parameter and buffer as `<layer index>.<kind>.<param>`.
    pub fn state(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let kind = layer.kind();
            let params = layer.params();
            // BLSTM holds two LSTMs with identically named params
            let halves = if kind == "blstm" {
                params.len() / 2
            } else {
                usize::MAX
            };
            for (j, p) in params.into_iter().enumerate() {
                let prefix = if j < halves { "" } else { "reverse." };
                out.push((format!("{i}.{kind}.{prefix}{}", p.name), p.value.clone()));
            }
        }
        out
    }

    pub fn load_state(&mut self, state: &[(String, Tensor)]) -> Result<(), NnError> {
        let names: Vec<String> = self.state().into_iter().map(|(n, _)| n).collect();
        if names.len() != state.len() {
            return Err(NnError::Checkpoint(format!(
                "checkpoint has {} tensors, network expects {}",
                state.len(),
                names.len()
            )));
        }
        for ((expected, p), (name, t)) in names.iter().zip(self.params_mut()).zip(state) {
            if expected != name || p.value.shape() != t.shape() {
                return Err(NnError::Checkpoint(format!(
                    "tensor {name} {:?} does not match {expected} {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t.clone();
        }
        Ok(())
    }
}

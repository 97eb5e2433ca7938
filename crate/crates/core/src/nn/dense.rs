use super::init::{glorot_limit, uniform_fill};
use super::layer::shape_err;
use super::linalg::{gemm, gemm_nt, gemm_tn};
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

/// Fully connected layer `y = xW + b` over `[batch, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut NnRng) -> Self {
        let mut w = Tensor::zeros(&[inputs, outputs]);
        uniform_fill(w.data_mut(), glorot_limit(inputs, outputs), rng);
        Self::from_params(w, Tensor::zeros(&[outputs]))
    }

    pub fn from_params(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight: Param::new("weight", weight),
            bias: Param::new("bias", bias),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[1]
    }
}

impl Layer for Dense {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, inputs] = x.dims("dense")?;
        if inputs != self.inputs() {
            return Err(shape_err(
                "dense",
                format!("expected {} inputs, got {inputs}", self.inputs()),
            ));
        }
        let outputs = self.outputs();
        let mut y = Vec::with_capacity(batch * outputs);
        for _ in 0..batch {
            y.extend_from_slice(self.bias.value.data());
        }
        gemm(
            x.data(),
            self.weight.value.data(),
            &mut y,
            batch,
            inputs,
            outputs,
        );
        self.input = Some(x.clone());
        Tensor::new(vec![batch, outputs], y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let x = self
            .input
            .as_ref()
            .ok_or(NnError::NoForwardCache("dense"))?;
        let (batch, inputs, outputs) = (x.shape()[0], self.inputs(), self.outputs());
        if grad_out.shape() != [batch, outputs] {
            return Err(shape_err(
                "dense backward",
                format!("grad shape {:?}", grad_out.shape()),
            ));
        }
        gemm_tn(
            x.data(),
            grad_out.data(),
            self.weight.grad.data_mut(),
            batch,
            inputs,
            outputs,
        );
        let db = self.bias.grad.data_mut();
        for row in grad_out.data().chunks_exact(outputs) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dx = vec![0.0; batch * inputs];
        gemm_nt(
            grad_out.data(),
            self.weight.value.data(),
            &mut dx,
            batch,
            outputs,
            inputs,
        );
        Tensor::new(vec![batch, inputs], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [n] if *n == self.inputs() => Ok(vec![self.outputs()]),
            _ => Err(shape_err(
                "dense",
                format!("input {input:?} vs {} features", self.inputs()),
            )),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

//! 1-D convolution and pooling over `[batch, time, channels]`.

use super::init::{glorot_limit, uniform_fill};
use super::layer::shape_err;
use super::linalg::{gemm, gemm_nt, gemm_tn};
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

/// Valid-padding cross-correlation with kernels `[k, ch_in, ch_out]`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub kernel: Param,
    pub bias: Param,
    stride: usize,
    cache: Option<(Vec<f64>, [usize; 3])>,
}

impl Conv1d {
    pub fn new(k: usize, ch_in: usize, ch_out: usize, stride: usize, rng: &mut NnRng) -> Self {
        let mut w = Tensor::zeros(&[k, ch_in, ch_out]);
        uniform_fill(w.data_mut(), glorot_limit(k * ch_in, k * ch_out), rng);
        Self::from_params(w, Tensor::zeros(&[ch_out]), stride)
    }

    pub fn from_params(kernel: Tensor, bias: Tensor, stride: usize) -> Self {
        assert!(stride >= 1, "stride must be positive");
        Self {
            kernel: Param::new("kernel", kernel),
            bias: Param::new("bias", bias),
            stride,
            cache: None,
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        let s = self.kernel.value.shape();
        (s[0], s[1], s[2])
    }

    fn out_len(&self, time: usize) -> Result<usize, NnError> {
        let (k, _, _) = self.dims();
        if k > time {
            return Err(shape_err(
                "conv1d",
                format!("kernel {k} longer than sequence {time}"),
            ));
        }
        Ok((time - k) / self.stride + 1)
    }
}

impl Layer for Conv1d {
    fn kind(&self) -> &'static str {
        "conv1d"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, ch] = x.dims("conv1d")?;
        let (k, ch_in, ch_out) = self.dims();
        if ch != ch_in {
            return Err(shape_err(
                "conv1d",
                format!("expected {ch_in} channels, got {ch}"),
            ));
        }
        let out_t = self.out_len(time)?;
        let width = k * ch_in;
        // im2col: every output step reads a contiguous k·ch_in window
        let mut cols = Vec::with_capacity(batch * out_t * width);
        for b in 0..batch {
            let sample = &x.data()[b * time * ch..(b + 1) * time * ch];
            for t in 0..out_t {
                let start = t * self.stride * ch;
                cols.extend_from_slice(&sample[start..start + width]);
            }
        }
        let rows = batch * out_t;
        let mut y = Vec::with_capacity(rows * ch_out);
        for _ in 0..rows {
            y.extend_from_slice(self.bias.value.data());
        }
        gemm(&cols, self.kernel.value.data(), &mut y, rows, width, ch_out);
        self.cache = Some((cols, [batch, time, ch]));
        Tensor::new(vec![batch, out_t, ch_out], y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let (cols, [batch, time, ch]) = self
            .cache
            .as_ref()
            .ok_or(NnError::NoForwardCache("conv1d"))?;
        let (batch, time, ch) = (*batch, *time, *ch);
        let (k, ch_in, ch_out) = self.dims();
        let out_t = self.out_len(time)?;
        if grad_out.shape() != [batch, out_t, ch_out] {
            return Err(shape_err(
                "conv1d backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let rows = batch * out_t;
        let width = k * ch_in;
        gemm_tn(
            cols,
            grad_out.data(),
            self.kernel.grad.data_mut(),
            rows,
            width,
            ch_out,
        );
        let db = self.bias.grad.data_mut();
        for row in grad_out.data().chunks_exact(ch_out) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dcols = vec![0.0; rows * width];
        gemm_nt(
            grad_out.data(),
            self.kernel.value.data(),
            &mut dcols,
            rows,
            ch_out,
            width,
        );
        let mut dx = vec![0.0; batch * time * ch];
        for b in 0..batch {
            for t in 0..out_t {
                let start = b * time * ch + t * self.stride * ch;
                let src = &dcols[(b * out_t + t) * width..(b * out_t + t + 1) * width];
                for (d, s) in dx[start..start + width].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        Tensor::new(vec![batch, time, ch], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let (_, ch_in, ch_out) = self.dims();
        match input {
            [time, ch] if *ch == ch_in => Ok(vec![self.out_len(*time)?, ch_out]),
            _ => Err(shape_err(
                "conv1d",
                format!("input {input:?}, expected [time, {ch_in}]"),
            )),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.kernel, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.kernel, &mut self.bias]
    }
}

/// Windowed max over time; gradient goes to the first maximum of each window.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pool: usize,
    stride: usize,
    cache: Option<(Vec<usize>, [usize; 3])>,
}

impl MaxPool1d {
    pub fn new(pool: usize, stride: usize) -> Self {
        assert!(pool >= 1 && stride >= 1, "pool and stride must be positive");
        Self {
            pool,
            stride,
            cache: None,
        }
    }

    fn out_len(&self, time: usize) -> Result<usize, NnError> {
        if self.pool > time {
            return Err(shape_err(
                "maxpool1d",
                format!("pool {} longer than sequence {time}", self.pool),
            ));
        }
        Ok((time - self.pool) / self.stride + 1)
    }
}

impl Layer for MaxPool1d {
    fn kind(&self) -> &'static str {
        "maxpool1d"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, ch] = x.dims("maxpool1d")?;
        let out_t = self.out_len(time)?;
        let mut y = Vec::with_capacity(batch * out_t * ch);
        let mut argmax = Vec::with_capacity(batch * out_t * ch);
        let d = x.data();
        for b in 0..batch {
            for t in 0..out_t {
                for c in 0..ch {
                    let base = b * time * ch + t * self.stride * ch + c;
                    let mut best = base;
                    for j in 1..self.pool {
                        let idx = base + j * ch;
                        if d[idx] > d[best] {
                            best = idx;
                        }
                    }
                    y.push(d[best]);
                    argmax.push(best);
                }
            }
        }
        self.cache = Some((argmax, [batch, time, ch]));
        Tensor::new(vec![batch, out_t, ch], y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let (argmax, shape) = self
            .cache
            .as_ref()
            .ok_or(NnError::NoForwardCache("maxpool1d"))?;
        if grad_out.len() != argmax.len() {
            return Err(shape_err(
                "maxpool1d backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let mut dx = vec![0.0; shape.iter().product()];
        for (&i, g) in argmax.iter().zip(grad_out.data()) {
            dx[i] += g;
        }
        Tensor::new(shape.to_vec(), dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [time, ch] => Ok(vec![self.out_len(*time)?, *ch]),
            _ => Err(shape_err("maxpool1d", format!("input {input:?}"))),
        }
    }
}

/// Max over the whole time axis: `[batch, time, ch] → [batch, ch]`.
#[derive(Debug, Clone, Default)]
pub struct GlobalMaxPool {
    cache: Option<(Vec<usize>, [usize; 3])>,
}

impl GlobalMaxPool {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for GlobalMaxPool {
    fn kind(&self) -> &'static str {
        "global_maxpool"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, ch] = x.dims("global_maxpool")?;
        if time == 0 {
            return Err(shape_err("global_maxpool", "empty sequence"));
        }
        let d = x.data();
        let mut y = Vec::with_capacity(batch * ch);
        let mut argmax = Vec::with_capacity(batch * ch);
        for b in 0..batch {
            for c in 0..ch {
                let mut best = b * time * ch + c;
                for t in 1..time {
                    let idx = b * time * ch + t * ch + c;
                    if d[idx] > d[best] {
                        best = idx;
                    }
                }
                y.push(d[best]);
                argmax.push(best);
            }
        }
        self.cache = Some((argmax, [batch, time, ch]));
        Tensor::new(vec![batch, ch], y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let (argmax, shape) = self
            .cache
            .as_ref()
            .ok_or(NnError::NoForwardCache("global_maxpool"))?;
        if grad_out.len() != argmax.len() {
            return Err(shape_err(
                "global_maxpool backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let mut dx = vec![0.0; shape.iter().product()];
        for (&i, g) in argmax.iter().zip(grad_out.data()) {
            dx[i] += g;
        }
        Tensor::new(shape.to_vec(), dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [time, ch] if *time > 0 => Ok(vec![*ch]),
            _ => Err(shape_err("global_maxpool", format!("input {input:?}"))),
        }
    }
}

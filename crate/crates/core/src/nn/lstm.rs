//! LSTM, bidirectional LSTM and the final-state readout.
//!
//! Gate blocks are laid out `[input | forget | candidate | output]` along the 4h axis.

use super::init::{glorot_limit, uniform_fill};
use super::layer::shape_err;
use super::linalg::{gemm, gemm_nt, gemm_tn};
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Unidirectional LSTM returning every hidden state, `[batch, time, in] → [batch, time, h]`.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w_input: Param,
    pub w_recurrent: Param,
    pub bias: Param,
    cache: Option<LstmCache>,
}

#[derive(Debug, Clone)]
struct LstmCache {
    x: Vec<f64>,
    batch: usize,
    time: usize,
    /// Post-activation gates per (b, t) row.
    gates: Vec<f64>,
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hidden: Vec<f64>,
}

impl Lstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut NnRng) -> Self {
        let mut wx = Tensor::zeros(&[inputs, 4 * hidden]);
        uniform_fill(wx.data_mut(), glorot_limit(inputs, hidden), rng);
        let mut wh = Tensor::zeros(&[hidden, 4 * hidden]);
        uniform_fill(wh.data_mut(), (1.0 / hidden as f64).sqrt(), rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        Self::from_params(wx, wh, b)
    }

    pub fn from_params(w_input: Tensor, w_recurrent: Tensor, bias: Tensor) -> Self {
        Self {
            w_input: Param::new("w_input", w_input),
            w_recurrent: Param::new("w_recurrent", w_recurrent),
            bias: Param::new("bias", bias),
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_input.value.shape()[0]
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.value.shape()[0]
    }
}

impl Layer for Lstm {
    fn kind(&self) -> &'static str {
        "lstm"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, inputs] = x.dims("lstm")?;
        if inputs != self.inputs() {
            return Err(shape_err(
                "lstm",
                format!("expected {} inputs, got {inputs}", self.inputs()),
            ));
        }
        if time == 0 {
            return Err(shape_err("lstm", "empty sequence"));
        }
        let h = self.hidden();
        let g4 = 4 * h;
        let rows = batch * time;

        let mut gates = Vec::with_capacity(rows * g4);
        for _ in 0..rows {
            gates.extend_from_slice(self.bias.value.data());
        }
        gemm(
            x.data(),
            self.w_input.value.data(),
            &mut gates,
            rows,
            inputs,
            g4,
        );

        let mut cells = vec![0.0; rows * h];
        let mut tanh_cells = vec![0.0; rows * h];
        let mut hidden = vec![0.0; rows * h];
        let mut h_prev = vec![0.0; batch * h];
        let mut c_prev = vec![0.0; batch * h];
        let mut z = vec![0.0; batch * g4];
        let wh = self.w_recurrent.value.data();

        for t in 0..time {
            for b in 0..batch {
                let r = b * time + t;
                z[b * g4..(b + 1) * g4].copy_from_slice(&gates[r * g4..(r + 1) * g4]);
            }
            gemm(&h_prev, wh, &mut z, batch, h, g4);
            for b in 0..batch {
                let r = b * time + t;
                let zb = &z[b * g4..(b + 1) * g4];
                let gr = &mut gates[r * g4..(r + 1) * g4];
                for j in 0..h {
                    let i_g = sigmoid(zb[j]);
                    let f_g = sigmoid(zb[h + j]);
                    let c_g = zb[2 * h + j].tanh();
                    let o_g = sigmoid(zb[3 * h + j]);
                    gr[j] = i_g;
                    gr[h + j] = f_g;
                    gr[2 * h + j] = c_g;
                    gr[3 * h + j] = o_g;
                    let c = f_g * c_prev[b * h + j] + i_g * c_g;
                    let tc = c.tanh();
                    cells[r * h + j] = c;
                    tanh_cells[r * h + j] = tc;
                    hidden[r * h + j] = o_g * tc;
                    c_prev[b * h + j] = c;
                    h_prev[b * h + j] = o_g * tc;
                }
            }
        }

        let out = Tensor::new(vec![batch, time, h], hidden.clone())?;
        self.cache = Some(LstmCache {
            x: x.data().to_vec(),
            batch,
            time,
            gates,
            cells,
            tanh_cells,
            hidden,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let cache = self.cache.as_ref().ok_or(NnError::NoForwardCache("lstm"))?;
        let (batch, time) = (cache.batch, cache.time);
        let (inputs, h) = (self.inputs(), self.hidden());
        let g4 = 4 * h;
        if grad_out.shape() != [batch, time, h] {
            return Err(shape_err(
                "lstm backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let dh_out = grad_out.data();
        let wh = self.w_recurrent.value.data();

        let mut dz_all = vec![0.0; batch * time * g4];
        let mut dh_next = vec![0.0; batch * h];
        let mut dc_next = vec![0.0; batch * h];
        let mut dz_t = vec![0.0; batch * g4];
        let mut h_prev = vec![0.0; batch * h];

        for t in (0..time).rev() {
            for b in 0..batch {
                let r = b * time + t;
                let gr = &cache.gates[r * g4..(r + 1) * g4];
                for j in 0..h {
                    let (i_g, f_g, c_g, o_g) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                    let tc = cache.tanh_cells[r * h + j];
                    let c_prev = if t > 0 {
                        cache.cells[(r - 1) * h + j]
                    } else {
                        0.0
                    };
                    let dh = dh_out[r * h + j] + dh_next[b * h + j];
                    let d_o = dh * tc;
                    let dc = dh * o_g * (1.0 - tc * tc) + dc_next[b * h + j];
                    let d_i = dc * c_g;
                    let d_c = dc * i_g;
                    let d_f = dc * c_prev;
                    dc_next[b * h + j] = dc * f_g;
                    let dz = &mut dz_t[b * g4..(b + 1) * g4];
                    dz[j] = d_i * i_g * (1.0 - i_g);
                    dz[h + j] = d_f * f_g * (1.0 - f_g);
                    dz[2 * h + j] = d_c * (1.0 - c_g * c_g);
                    dz[3 * h + j] = d_o * o_g * (1.0 - o_g);
                }
                dz_all[r * g4..(r + 1) * g4].copy_from_slice(&dz_t[b * g4..(b + 1) * g4]);
                if t > 0 {
                    h_prev[b * h..(b + 1) * h].copy_from_slice(&cache.hidden[(r - 1) * h..r * h]);
                }
            }
            dh_next.fill(0.0);
            gemm_nt(&dz_t, wh, &mut dh_next, batch, g4, h);
            if t > 0 {
                gemm_tn(
                    &h_prev,
                    &dz_t,
                    self.w_recurrent.grad.data_mut(),
                    batch,
                    h,
                    g4,
                );
            }
        }

        let rows = batch * time;
        gemm_tn(
            &cache.x,
            &dz_all,
            self.w_input.grad.data_mut(),
            rows,
            inputs,
            g4,
        );
        let db = self.bias.grad.data_mut();
        for row in dz_all.chunks_exact(g4) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dx = vec![0.0; rows * inputs];
        gemm_nt(
            &dz_all,
            self.w_input.value.data(),
            &mut dx,
            rows,
            g4,
            inputs,
        );
        Tensor::new(vec![batch, time, inputs], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [time, n] if *n == self.inputs() && *time > 0 => Ok(vec![*time, self.hidden()]),
            _ => Err(shape_err(
                "lstm",
                format!("input {input:?}, expected [time, {}]", self.inputs()),
            )),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w_input, &self.w_recurrent, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_input, &mut self.w_recurrent, &mut self.bias]
    }
}

/// Reverse the time axis of a `[batch, time, d]` buffer.
pub(crate) fn reverse_time(data: &[f64], batch: usize, time: usize, d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.len());
    for b in 0..batch {
        for t in (0..time).rev() {
            let r = b * time + t;
            out.extend_from_slice(&data[r * d..(r + 1) * d]);
        }
    }
    out
}

/// Forward and time-reversed LSTMs concatenated per step as `[forward, backward]`.
#[derive(Debug, Clone)]
pub struct Blstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

impl Blstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut NnRng) -> Self {
        Self {
            forward: Lstm::new(inputs, hidden, rng),
            backward: Lstm::new(inputs, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }
}

impl Layer for Blstm {
    fn kind(&self) -> &'static str {
        "blstm"
    }

    fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, inputs] = x.dims("blstm")?;
        let h = self.hidden();
        let fwd = self.forward.forward(x, mode, rng)?;
        let reversed = Tensor::new(
            x.shape().to_vec(),
            reverse_time(x.data(), batch, time, inputs),
        )?;
        let bwd = self.backward.forward(&reversed, mode, rng)?;
        let bwd = reverse_time(bwd.data(), batch, time, h);
        let mut out = Vec::with_capacity(batch * time * 2 * h);
        for (f, b) in fwd.data().chunks_exact(h).zip(bwd.chunks_exact(h)) {
            out.extend_from_slice(f);
            out.extend_from_slice(b);
        }
        Tensor::new(vec![batch, time, 2 * h], out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let [batch, time, d] = grad_out.dims("blstm backward")?;
        let h = self.hidden();
        if d != 2 * h {
            return Err(shape_err(
                "blstm backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let mut g_fwd = Vec::with_capacity(batch * time * h);
        let mut g_bwd = Vec::with_capacity(batch * time * h);
        for row in grad_out.data().chunks_exact(2 * h) {
            g_fwd.extend_from_slice(&row[..h]);
            g_bwd.extend_from_slice(&row[h..]);
        }
        let dx_f = self
            .forward
            .backward(&Tensor::new(vec![batch, time, h], g_fwd)?)?;
        let g_bwd = reverse_time(&g_bwd, batch, time, h);
        let dx_b = self
            .backward
            .backward(&Tensor::new(vec![batch, time, h], g_bwd)?)?;
        let inputs = self.forward.inputs();
        let dx_b = reverse_time(dx_b.data(), batch, time, inputs);
        let dx = dx_f.data().iter().zip(&dx_b).map(|(a, b)| a + b).collect();
        Tensor::new(vec![batch, time, inputs], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let s = self.forward.output_shape(input)?;
        Ok(vec![s[0], 2 * s[1]])
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.forward.params();
        p.extend(self.backward.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.forward.params_mut();
        p.extend(self.backward.params_mut());
        p
    }
}

/// BLSTM summary: final forward state (t = T−1) concatenated with final backward state (t = 0).
#[derive(Debug, Clone, Default)]
pub struct LastStep {
    shape: Option<[usize; 3]>,
}

impl LastStep {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for LastStep {
    fn kind(&self) -> &'static str {
        "last_step"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, d] = x.dims("last_step")?;
        if d % 2 != 0 || time == 0 {
            return Err(shape_err("last_step", format!("input {:?}", x.shape())));
        }
        let h = d / 2;
        let mut out = Vec::with_capacity(batch * d);
        for b in 0..batch {
            let last = (b * time + time - 1) * d;
            let first = b * time * d;
            out.extend_from_slice(&x.data()[last..last + h]);
            out.extend_from_slice(&x.data()[first + h..first + d]);
        }
        self.shape = Some([batch, time, d]);
        Tensor::new(vec![batch, d], out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let [batch, time, d] = self.shape.ok_or(NnError::NoForwardCache("last_step"))?;
        if grad_out.shape() != [batch, d] {
            return Err(shape_err(
                "last_step backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let h = d / 2;
        let mut dx = vec![0.0; batch * time * d];
        for b in 0..batch {
            let g = &grad_out.data()[b * d..(b + 1) * d];
            let last = (b * time + time - 1) * d;
            let first = b * time * d;
            dx[last..last + h].copy_from_slice(&g[..h]);
            dx[first + h..first + d].copy_from_slice(&g[h..]);
        }
        Tensor::new(vec![batch, time, d], dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [time, d] if *time > 0 && d % 2 == 0 => Ok(vec![*d]),
            _ => Err(shape_err("last_step", format!("input {input:?}"))),
        }
    }
}

use super::init::{glorot_limit, uniform_fill};
use super::layer::shape_err;
use super::linalg::{dot, gemm, gemm_nt, gemm_tn};
use super::{Layer, Mode, NnError, NnRng, Param, Tensor};

/// Additive attention pooling over time.
///
/// `score_t = v · tanh(W h_t + b)`, `α = softmax_t(score)`, `context = Σ_t α_t h_t`.
/// Maps `[batch, time, d]` to `[batch, d]` and keeps `α` for inspection.
#[derive(Debug, Clone)]
pub struct AttentionPool {
    pub w: Param,
    pub b: Param,
    pub v: Param,
    weights: Option<Tensor>,
    cache: Option<AttnCache>,
}

#[derive(Debug, Clone)]
struct AttnCache {
    h: Vec<f64>,
    u: Vec<f64>,
    alpha: Vec<f64>,
    batch: usize,
    time: usize,
}

impl AttentionPool {
    pub fn new(dim: usize, attn_dim: usize, rng: &mut NnRng) -> Self {
        let mut w = Tensor::zeros(&[dim, attn_dim]);
        uniform_fill(w.data_mut(), glorot_limit(dim, attn_dim), rng);
        let mut v = Tensor::zeros(&[attn_dim]);
        uniform_fill(v.data_mut(), glorot_limit(attn_dim, 1), rng);
        Self::from_params(w, Tensor::zeros(&[attn_dim]), v)
    }

    pub fn from_params(w: Tensor, b: Tensor, v: Tensor) -> Self {
        Self {
            w: Param::new("w", w),
            b: Param::new("b", b),
            v: Param::new("v", v),
            weights: None,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.value.shape()[0]
    }

    pub fn attn_dim(&self) -> usize {
        self.w.value.shape()[1]
    }
}

impl Layer for AttentionPool {
    fn kind(&self) -> &'static str {
        "attention"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut NnRng) -> Result<Tensor, NnError> {
        let [batch, time, d] = x.dims("attention")?;
        if d != self.dim() {
            return Err(shape_err(
                "attention",
                format!("expected dim {}, got {d}", self.dim()),
            ));
        }
        if time == 0 {
            return Err(shape_err("attention", "empty sequence"));
        }
        let a = self.attn_dim();
        let rows = batch * time;
        let mut u = Vec::with_capacity(rows * a);
        for _ in 0..rows {
            u.extend_from_slice(self.b.value.data());
        }
        gemm(x.data(), self.w.value.data(), &mut u, rows, d, a);
        u.iter_mut().for_each(|v| *v = v.tanh());

        let v = self.v.value.data();
        let mut alpha = Vec::with_capacity(rows);
        let mut context = vec![0.0; batch * d];
        for b in 0..batch {
            let scores: Vec<f64> = (0..time)
                .map(|t| dot(&u[(b * time + t) * a..(b * time + t + 1) * a], v))
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            let ctx = &mut context[b * d..(b + 1) * d];
            for (t, e) in exps.iter().enumerate() {
                let w = e / total;
                alpha.push(w);
                let h = &x.data()[(b * time + t) * d..(b * time + t + 1) * d];
                for (c, hv) in ctx.iter_mut().zip(h) {
                    *c += w * hv;
                }
            }
        }
        self.weights = Some(Tensor::new(vec![batch, time], alpha.clone())?);
        self.cache = Some(AttnCache {
            h: x.data().to_vec(),
            u,
            alpha,
            batch,
            time,
        });
        Tensor::new(vec![batch, d], context)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor, NnError> {
        let c = self
            .cache
            .as_ref()
            .ok_or(NnError::NoForwardCache("attention"))?;
        let (batch, time, d, a) = (c.batch, c.time, self.dim(), self.attn_dim());
        if grad_out.shape() != [batch, d] {
            return Err(shape_err(
                "attention backward",
                format!("{:?}", grad_out.shape()),
            ));
        }
        let rows = batch * time;
        let mut dh = vec![0.0; rows * d];
        let mut dscore = vec![0.0; rows];
        for b in 0..batch {
            let g = &grad_out.data()[b * d..(b + 1) * d];
            let dalpha: Vec<f64> = (0..time)
                .map(|t| dot(g, &c.h[(b * time + t) * d..(b * time + t + 1) * d]))
                .collect();
            let alpha = &c.alpha[b * time..(b + 1) * time];
            let mean: f64 = alpha.iter().zip(&dalpha).map(|(p, q)| p * q).sum();
            for t in 0..time {
                let r = b * time + t;
                dscore[r] = alpha[t] * (dalpha[t] - mean);
                for (dv, gv) in dh[r * d..(r + 1) * d].iter_mut().zip(g) {
                    *dv += alpha[t] * gv;
                }
            }
        }
        // through score = u·v and u = tanh(pre)
        let v = self.v.value.data();
        let mut dpre = vec![0.0; rows * a];
        for r in 0..rows {
            let ur = &c.u[r * a..(r + 1) * a];
            let dv = self.v.grad.data_mut();
            for k in 0..a {
                dv[k] += dscore[r] * ur[k];
                dpre[r * a + k] = dscore[r] * v[k] * (1.0 - ur[k] * ur[k]);
            }
        }
        gemm_tn(&c.h, &dpre, self.w.grad.data_mut(), rows, d, a);
        let db = self.b.grad.data_mut();
        for row in dpre.chunks_exact(a) {
            for (x, y) in db.iter_mut().zip(row) {
                *x += y;
            }
        }
        gemm_nt(&dpre, self.w.value.data(), &mut dh, rows, a, d);
        Tensor::new(vec![batch, time, d], dh)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        match input {
            [time, d] if *time > 0 && *d == self.dim() => Ok(vec![*d]),
            _ => Err(shape_err(
                "attention",
                format!("input {input:?}, expected [time, {}]", self.dim()),
            )),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b, &self.v]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b, &mut self.v]
    }

    fn attention_weights(&self) -> Option<&Tensor> {
        self.weights.as_ref()
    }
}

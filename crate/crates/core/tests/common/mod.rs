#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use sertk::nn::{Layer, Mode, NnRng, Tensor};

pub fn rng(seed: u64) -> NnRng {
    NnRng::seed_from_u64(seed)
}

pub fn random_vec(r: &mut NnRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

pub fn random_tensor(r: &mut NnRng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), random_vec(r, n, scale)).unwrap()
}

/// |X_k| for k = 0..=n/2 of `x` zero-padded to `n`, by the O(n²) definition.
pub fn naive_dft_magnitude(x: &[f64], n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Orthonormal DCT-II by the double-loop definition.
pub fn naive_dct2(x: &[f64], num_coeffs: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..num_coeffs)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                .sum();
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            scale * s
        })
        .collect()
}

/// Frequency of the largest DFT bin (excluding DC), refined by parabolic interpolation.
pub fn dft_peak_hz(x: &[f64], sample_rate: f64) -> f64 {
    let n = x.len();
    let mags = naive_dft_magnitude(x, n);
    let k = (1..mags.len() - 1)
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))
        .unwrap();
    let (l, c, r) = (mags[k - 1], mags[k], mags[k + 1]);
    let offset = 0.5 * (l - r) / (l - 2.0 * c + r);
    (k as f64 + offset) * sample_rate / n as f64
}

pub fn sine(freq: f64, amp: f64, len: usize, rate: f64) -> Vec<f64> {
    (0..len)
        .map(|n| amp * (2.0 * PI * freq * n as f64 / rate).sin())
        .collect()
}

/// Relative error ‖a − b‖ / max(‖a‖ + ‖b‖, 1e-6). The floor keeps gradients that are
/// exactly zero in theory (a bias feeding batch normalization) from dividing noise by noise.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 =
        a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-6)
}

/// Worst relative error over the input gradient and every trainable parameter
/// gradient of `layer`, for the scalar loss `Σ r ⊙ forward(x)` with random `r`.
pub fn gradcheck_layer(layer: &mut dyn Layer, x: &Tensor, mode: Mode, seed: u64) -> f64 {
    let step = 1e-5;
    let mut r = rng(seed);
    let mut fwd_rng = rng(0);
    let y = layer.forward(x, mode, &mut fwd_rng).unwrap();
    let weights = random_tensor(&mut r, y.shape(), 1.0);
    for p in layer.params_mut() {
        p.zero_grad();
    }
    let dx = layer.backward(&weights).unwrap();
    let analytic_params: Vec<Vec<f64>> = layer
        .params()
        .iter()
        .map(|p| {
            if p.trainable {
                p.grad.data().to_vec()
            } else {
                Vec::new()
            }
        })
        .collect();

    let loss = |layer: &mut dyn Layer, x: &Tensor| -> f64 {
        let mut g = rng(0);
        let y = layer.forward(x, mode, &mut g).unwrap();
        y.data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a * b)
            .sum()
    };

    let mut numeric = vec![0.0; x.len()];
    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data()[i];
        xp.data_mut()[i] = orig + step;
        let up = loss(layer, &xp);
        xp.data_mut()[i] = orig - step;
        let down = loss(layer, &xp);
        xp.data_mut()[i] = orig;
        numeric[i] = (up - down) / (2.0 * step);
    }
    let mut worst = rel_error(dx.data(), &numeric);

    for (j, analytic) in analytic_params.iter().enumerate() {
        if analytic.is_empty() {
            continue;
        }
        let mut numeric = vec![0.0; analytic.len()];
        for k in 0..analytic.len() {
            let orig = layer.params()[j].value.data()[k];
            layer.params_mut()[j].value.data_mut()[k] = orig + step;
            let up = loss(layer, x);
            layer.params_mut()[j].value.data_mut()[k] = orig - step;
            let down = loss(layer, x);
            layer.params_mut()[j].value.data_mut()[k] = orig;
            numeric[k] = (up - down) / (2.0 * step);
        }
        worst = worst.max(rel_error(analytic, &numeric));
    }
    worst
}

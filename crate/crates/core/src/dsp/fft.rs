//! Iterative radix-2 decimation-in-time FFT.

use std::f64::consts::PI;

use super::DspError;

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `fft_size / 2 + 1` non-negative magnitudes.
    pub magnitudes: Vec<f64>,
    pub fft_size: usize,
    pub bin_hz: f64,
}

impl Spectrum {
    /// A spectrum built directly from magnitudes (bins `0..=fft_size/2`).
    pub fn from_magnitudes(magnitudes: Vec<f64>, sample_rate: u32) -> Self {
        let fft_size = (magnitudes.len() - 1) * 2;
        Self {
            magnitudes,
            fft_size,
            bin_hz: sample_rate as f64 / fft_size as f64,
        }
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.magnitudes.len()).map(|k| self.bin_freq(k))
    }

    pub fn power(&self) -> Vec<f64> {
        self.magnitudes.iter().map(|m| m * m).collect()
    }
}

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if n == 0 || !n.is_power_of_two() {
            return Err(DspError::NotPowerOfTwo(n));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let half = n / 2;
        let (cos, sin) = (0..half)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        Ok(Self {
            n,
            cos,
            sin,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X_k = Σ x_n e^{-2πikn/N}`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        assert!(
            re.len() == n && im.len() == n,
            "buffer length must equal plan size"
        );
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let (wr, wi) = (self.cos[k * stride], self.sin[k * stride]);
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            size *= 2;
        }
    }

    /// Magnitudes of bins `0..=N/2` of a real frame zero-padded to the plan size.
    pub fn magnitude(&self, frame: &[f64], sample_rate: u32) -> Result<Spectrum, DspError> {
        if frame.len() > self.n {
            return Err(DspError::FrameTooLong {
                frame_len: frame.len(),
                fft_size: self.n,
            });
        }
        let mut re = vec![0.0; self.n];
        re[..frame.len()].copy_from_slice(frame);
        let mut im = vec![0.0; self.n];
        self.forward(&mut re, &mut im);
        let magnitudes = re[..=self.n / 2]
            .iter()
            .zip(&im[..=self.n / 2])
            .map(|(r, i)| r.hypot(*i))
            .collect();
        Ok(Spectrum {
            magnitudes,
            fft_size: self.n,
            bin_hz: sample_rate as f64 / self.n as f64,
        })
    }
}

/// One-shot magnitude spectrum; prefer a reused [`FftPlan`] in loops.
pub fn fft_magnitude(
    frame: &[f64],
    fft_size: usize,
    sample_rate: u32,
) -> Result<Spectrum, DspError> {
    FftPlan::new(fft_size)?.magnitude(frame, sample_rate)
}

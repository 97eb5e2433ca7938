//! HTK-style triangular mel filterbank over the power spectrum.

use super::{DspError, Spectrum};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed filter weights for a fixed FFT size and band.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `num_filters` rows of `fft_size/2 + 1` weights.
    weights: Vec<Vec<f64>>,
    /// `num_filters + 2` edge frequencies in Hz.
    edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(
        num_filters: usize,
        fft_size: usize,
        sample_rate: u32,
        fmin: f64,
        fmax: f64,
    ) -> Result<Self, DspError> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
            return Err(DspError::BadBand { fmin, fmax });
        }
        let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges_hz: Vec<f64> = (0..num_filters + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (num_filters + 1) as f64))
            .collect();
        let bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let weights = (0..num_filters)
            .map(|m| {
                let (left, center, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= left || f >= right {
                            0.0
                        } else if f <= center {
                            (f - left) / (center - left)
                        } else {
                            (right - f) / (right - center)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { weights, edges_hz })
    }

    pub fn num_filters(&self) -> usize {
        self.weights.len()
    }

    /// Center frequency of every filter in Hz.
    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }

    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn weights(&self, filter: usize) -> &[f64] {
        &self.weights[filter]
    }

    /// Filter energies of the power spectrum `|X_k|²`.
    pub fn apply(&self, spectrum: &Spectrum) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| {
                w.iter()
                    .zip(&spectrum.magnitudes)
                    .map(|(w, m)| w * m * m)
                    .sum()
            })
            .collect()
    }
}

/// One-shot filterbank evaluation; derives the sample rate from the spectrum.
pub fn mel_filterbank(
    spectrum: &Spectrum,
    num_filters: usize,
    fmin: f64,
    fmax: f64,
) -> Result<Vec<f64>, DspError> {
    let sample_rate = (spectrum.bin_hz * spectrum.fft_size as f64).round() as u32;
    Ok(
        MelFilterbank::new(num_filters, spectrum.fft_size, sample_rate, fmin, fmax)?
            .apply(spectrum),
    )
}

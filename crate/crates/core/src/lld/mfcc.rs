use std::f64::consts::PI;

use crate::dsp::{MelFilterbank, Spectrum};

use super::{LOG_FLOOR, MEL_FMAX, MEL_FMIN, NUM_MEL_FILTERS, NUM_MFCC};

/// Orthonormal DCT-II truncated to the first `num_coeffs` outputs.
#[derive(Debug, Clone)]
pub struct Dct {
    basis: Vec<Vec<f64>>,
}

impl Dct {
    pub fn new(input_len: usize, num_coeffs: usize) -> Self {
        let n = input_len as f64;
        let basis = (0..num_coeffs)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / n).sqrt()
                } else {
                    (2.0 / n).sqrt()
                };
                (0..input_len)
                    .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .collect()
            })
            .collect();
        Self { basis }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|row| row.iter().zip(x).map(|(b, v)| b * v).sum())
            .collect()
    }
}

/// Cepstral coefficients 0..12 from mel filter energies.
pub fn cepstrum(energies: &[f64], dct: &Dct) -> Vec<f64> {
    let logs: Vec<f64> = energies.iter().map(|&e| e.max(LOG_FLOOR).ln()).collect();
    dct.apply(&logs)
}

/// 13 MFCCs of a magnitude spectrum with the default 26-filter 0–8 kHz bank.
pub fn mfcc(spectrum: &Spectrum) -> Vec<f64> {
    let sample_rate = (spectrum.bin_hz * spectrum.fft_size as f64).round() as u32;
    let fmax = MEL_FMAX.min(sample_rate as f64 / 2.0);
    let bank = MelFilterbank::new(
        NUM_MEL_FILTERS,
        spectrum.fft_size,
        sample_rate,
        MEL_FMIN,
        fmax,
    )
    .expect("default mel band is valid for the spectrum's sample rate");
    cepstrum(&bank.apply(spectrum), &Dct::new(NUM_MEL_FILTERS, NUM_MFCC))
}

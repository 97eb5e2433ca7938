//! Per-frame spectral and time-domain descriptors.

use crate::dsp::Spectrum;

use super::{CONTRAST_ALPHA, CONTRAST_EDGES_HZ, LOG_FLOOR, ROLLOFF_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralShape {
    pub centroid: f64,
    pub bandwidth: f64,
    pub rolloff: f64,
    pub flatness: f64,
}

/// Centroid, bandwidth, 85 % rolloff and flatness of a magnitude spectrum.
/// All four are zero for an all-zero spectrum.
pub fn spectral_descriptors(spectrum: &Spectrum) -> SpectralShape {
    let m = &spectrum.magnitudes;
    let total: f64 = m.iter().sum();
    if total <= 0.0 {
        return SpectralShape::default();
    }
    let centroid = spectrum
        .frequencies()
        .zip(m)
        .map(|(f, w)| f * w)
        .sum::<f64>()
        / total;
    let bandwidth = (spectrum
        .frequencies()
        .zip(m)
        .map(|(f, w)| w * (f - centroid).powi(2))
        .sum::<f64>()
        / total)
        .sqrt();

    let threshold = ROLLOFF_FRACTION * total;
    let mut cumulative = 0.0;
    let mut rolloff = spectrum.bin_freq(m.len() - 1);
    for (k, w) in m.iter().enumerate() {
        cumulative += w;
        if cumulative >= threshold {
            rolloff = spectrum.bin_freq(k);
            break;
        }
    }

    let n = m.len() as f64;
    let log_mean = m.iter().map(|&w| w.max(LOG_FLOOR).ln()).sum::<f64>() / n;
    let arith = m.iter().map(|&w| w.max(LOG_FLOOR)).sum::<f64>() / n;
    let flatness = log_mean.exp() / arith;

    SpectralShape {
        centroid,
        bandwidth,
        rolloff,
        flatness,
    }
}

/// Bin index range `[start, end)` of each contrast band.
pub fn contrast_band_bins(spectrum: &Spectrum) -> Vec<std::ops::Range<usize>> {
    let bins = spectrum.magnitudes.len();
    let last = CONTRAST_EDGES_HZ.len() - 2;
    CONTRAST_EDGES_HZ
        .windows(2)
        .enumerate()
        .map(|(band, edge)| {
            let start = (0..bins)
                .find(|&k| spectrum.bin_freq(k) >= edge[0])
                .unwrap_or(bins);
            // the top band is closed so that the Nyquist bin is included
            let end = if band == last {
                (0..bins)
                    .rev()
                    .find(|&k| spectrum.bin_freq(k) <= edge[1])
                    .map_or(start, |k| k + 1)
            } else {
                (0..bins)
                    .find(|&k| spectrum.bin_freq(k) >= edge[1])
                    .unwrap_or(bins)
            };
            start..end.max(start)
        })
        .collect()
}

/// Octave-band log ratio of peak mean to valley mean.
pub fn spectral_contrast(spectrum: &Spectrum) -> [f64; 7] {
    let mut out = [0.0; 7];
    for (band, range) in contrast_band_bins(spectrum).into_iter().enumerate() {
        let mut mags = spectrum.magnitudes[range].to_vec();
        if mags.is_empty() {
            continue;
        }
        mags.sort_by(|a, b| a.total_cmp(b));
        let count = ((CONTRAST_ALPHA * mags.len() as f64).round() as usize).max(1);
        let valley = mags[..count].iter().sum::<f64>() / count as f64;
        let peak = mags[mags.len() - count..].iter().sum::<f64>() / count as f64;
        out[band] = (peak.max(LOG_FLOOR) / valley.max(LOG_FLOOR)).ln();
    }
    out
}

/// Zero-crossing rate per sample pair and RMS of an unwindowed frame.
pub fn zcr_rms(frame: &[f64]) -> (f64, f64) {
    if frame.is_empty() {
        return (0.0, 0.0);
    }
    let rms = (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt();
    if frame.len() < 2 {
        return (0.0, rms);
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    (crossings as f64 / (frame.len() - 1) as f64, rms)
}

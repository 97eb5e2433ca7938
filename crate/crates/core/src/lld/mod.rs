//! Hand-crafted frame-level low-level descriptors (LLDs).
//!
//! Every frame yields 52 values in a frozen order:
//!
//! | columns | feature |
//! |---------|---------|
//! | 0–12    | MFCC 0..12 |
//! | 13–25   | ΔMFCC |
//! | 26–38   | ΔΔMFCC |
//! | 39–42   | spectral centroid, bandwidth, rolloff (85 %), flatness |
//! | 43–44   | RMS energy, zero-crossing rate |
//! | 45–51   | spectral contrast bands 1–7 |
//!
//! Spectral features use the Hamming-windowed frame; RMS and ZCR use the raw frame.

mod delta;
mod descriptors;
mod io;
mod mfcc;

use thiserror::Error;

use crate::audio::{ConditionedClip, PIPELINE_RATE};
use crate::dsp::{self, DspError, FftPlan, MelFilterbank, WindowKind};

pub use delta::delta;
pub use descriptors::{
    contrast_band_bins, spectral_contrast, spectral_descriptors, zcr_rms, SpectralShape,
};
pub use mfcc::{cepstrum, mfcc, Dct};

pub const NUM_LLDS: usize = 52;
pub const NUM_MFCC: usize = 13;
pub const NUM_MEL_FILTERS: usize = 26;
pub const MEL_FMIN: f64 = 0.0;
pub const MEL_FMAX: f64 = 8000.0;
/// Floor applied before every logarithm.
pub const LOG_FLOOR: f64 = 1e-10;
pub const ROLLOFF_FRACTION: f64 = 0.85;
pub const CONTRAST_EDGES_HZ: [f64; 8] = [0.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0, 8000.0];
pub const CONTRAST_ALPHA: f64 = 0.2;
pub const DELTA_WIDTH: usize = 2;

/// Column index of the first spectral descriptor (centroid).
pub const COL_CENTROID: usize = 39;
pub const COL_BANDWIDTH: usize = 40;
pub const COL_ROLLOFF: usize = 41;
pub const COL_FLATNESS: usize = 42;
pub const COL_RMS: usize = 43;
pub const COL_ZCR: usize = 44;
pub const COL_CONTRAST: usize = 45;

#[derive(Debug, Error)]
pub enum LldError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("LLD file format error: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// The 52 hand-crafted feature names in column order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(NUM_LLDS);
    for prefix in ["mfcc", "mfcc_delta", "mfcc_delta2"] {
        names.extend((0..NUM_MFCC).map(|i| format!("{prefix}_{i}")));
    }
    names.extend(
        [
            "spectral_centroid",
            "spectral_bandwidth",
            "spectral_rolloff",
            "spectral_flatness",
            "rms",
            "zcr",
        ]
        .map(String::from),
    );
    names.extend((1..=7).map(|b| format!("spectral_contrast_{b}")));
    names
}

/// Per-utterance `frames × features` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    pub values: Vec<f64>,
    pub num_frames: usize,
    pub feature_names: Vec<String>,
    pub frame_ms: u32,
    pub clip_id: String,
}

impl LldMatrix {
    pub fn new(
        values: Vec<f64>,
        num_frames: usize,
        feature_names: Vec<String>,
        frame_ms: u32,
        clip_id: impl Into<String>,
    ) -> Self {
        assert_eq!(
            values.len(),
            num_frames * feature_names.len(),
            "LLD matrix shape mismatch"
        );
        Self {
            values,
            num_frames,
            feature_names,
            frame_ms,
            clip_id: clip_id.into(),
        }
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        let d = self.num_features();
        &self.values[frame * d..(frame + 1) * d]
    }

    pub fn get(&self, frame: usize, feature: usize) -> f64 {
        self.values[frame * self.num_features() + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.num_frames).map(|t| self.get(t, feature)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Reusable extractor holding the FFT plan, window, filterbank and DCT for one frame length.
#[derive(Debug, Clone)]
pub struct LldExtractor {
    frame_ms: u32,
    frame_len: usize,
    hop: usize,
    window: Vec<f64>,
    plan: FftPlan,
    mel: MelFilterbank,
    dct: Dct,
}

impl LldExtractor {
    pub fn new(frame_ms: u32, window: WindowKind) -> Result<Self, LldError> {
        if !dsp::SUPPORTED_FRAME_MS.contains(&frame_ms) {
            return Err(DspError::UnsupportedFrameLength(frame_ms).into());
        }
        let frame_len = (frame_ms * PIPELINE_RATE / 1000) as usize;
        let fft_size = dsp::fft_size_for(frame_len);
        Ok(Self {
            frame_ms,
            frame_len,
            hop: frame_len / 2,
            window: dsp::window(window, frame_len),
            plan: FftPlan::new(fft_size)?,
            mel: MelFilterbank::new(NUM_MEL_FILTERS, fft_size, PIPELINE_RATE, MEL_FMIN, MEL_FMAX)?,
            dct: Dct::new(NUM_MEL_FILTERS, NUM_MFCC),
        })
    }

    pub fn frame_ms(&self) -> u32 {
        self.frame_ms
    }

    pub fn extract(&self, clip: &ConditionedClip, clip_id: &str) -> Result<LldMatrix, LldError> {
        self.extract_samples(&clip.samples, clip_id)
    }

    /// Extract from an arbitrary 16 kHz signal at least one frame long.
    pub fn extract_samples(&self, samples: &[f64], clip_id: &str) -> Result<LldMatrix, LldError> {
        let frames = dsp::frame_samples(samples, self.frame_len, self.hop, PIPELINE_RATE)?;
        let n = frames.num_frames();

        let mut cepstra = Vec::with_capacity(n * NUM_MFCC);
        let mut scalars = Vec::with_capacity(n * 13);
        let mut windowed = vec![0.0; self.frame_len];
        for raw in frames.rows() {
            for ((w, x), c) in windowed.iter_mut().zip(raw).zip(&self.window) {
                *w = x * c;
            }
            let spectrum = self.plan.magnitude(&windowed, PIPELINE_RATE)?;
            cepstra.extend(cepstrum(&self.mel.apply(&spectrum), &self.dct));
            let shape = spectral_descriptors(&spectrum);
            let (zcr, rms) = zcr_rms(raw);
            scalars.extend([
                shape.centroid,
                shape.bandwidth,
                shape.rolloff,
                shape.flatness,
                rms,
                zcr,
            ]);
            scalars.extend(spectral_contrast(&spectrum));
        }

        let d1 = delta(&cepstra, n, NUM_MFCC, DELTA_WIDTH);
        let d2 = delta(&d1, n, NUM_MFCC, DELTA_WIDTH);

        let mut values = Vec::with_capacity(n * NUM_LLDS);
        for t in 0..n {
            let span = t * NUM_MFCC..(t + 1) * NUM_MFCC;
            values.extend_from_slice(&cepstra[span.clone()]);
            values.extend_from_slice(&d1[span.clone()]);
            values.extend_from_slice(&d2[span]);
            values.extend_from_slice(&scalars[t * 13..(t + 1) * 13]);
        }
        Ok(LldMatrix::new(
            values,
            n,
            feature_names(),
            self.frame_ms,
            clip_id,
        ))
    }
}

/// Extract the 52 LLDs of a conditioned clip with the default Hamming window.
pub fn extract_llds(clip: &ConditionedClip, frame_ms: u32) -> Result<LldMatrix, LldError> {
    LldExtractor::new(frame_ms, WindowKind::Hamming)?.extract(clip, "")
}

pub use io::{read_lld, read_lld_csv, write_lld, write_lld_csv};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::TARGET_SAMPLES;

    #[test]
    fn names_are_52_and_unique() {
        let names = feature_names();
        assert_eq!(names.len(), NUM_LLDS);
        let set: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), NUM_LLDS);
        assert_eq!(names[COL_CENTROID], "spectral_centroid");
        assert_eq!(names[COL_ZCR], "zcr");
        assert_eq!(names[COL_CONTRAST], "spectral_contrast_1");
    }

    #[test]
    fn silence_is_finite_with_zero_conventions() {
        let clip = ConditionedClip::from_samples(vec![0.0; TARGET_SAMPLES]);
        let m = extract_llds(&clip, 100).unwrap();
        assert_eq!((m.num_frames, m.num_features()), (149, 52));
        assert!(m.all_finite());
        for t in 0..m.num_frames {
            assert_eq!(m.get(t, COL_ZCR), 0.0);
            assert_eq!(m.get(t, COL_RMS), 0.0);
            assert_eq!(m.get(t, COL_CENTROID), 0.0);
            assert!((m.get(t, 0) - 26f64.sqrt() * LOG_FLOOR.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unsupported_resolution() {
        let clip = ConditionedClip::from_samples(vec![0.0; TARGET_SAMPLES]);
        assert!(matches!(
            extract_llds(&clip, 20),
            Err(LldError::Dsp(DspError::UnsupportedFrameLength(20)))
        ));
    }
}

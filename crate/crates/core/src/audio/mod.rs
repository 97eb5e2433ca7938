//! Audio ingest: WAV decoding, resampling, and fixed-length conditioning.
//!
//! Every utterance enters the pipeline as 16 kHz mono, exactly 7.52 s long:
//! longer clips keep their first 120 320 samples, shorter ones are padded
//! with trailing zeros.

mod resample;
mod wav;

use thiserror::Error;

pub use resample::{resample, resample_samples, resampled_len};
pub use wav::{
    decode_wav, decode_wav_bytes, encode_pcm16_interleaved, encode_wav_bytes, quantize_pcm16,
    write_wav,
};

/// Pipeline sample rate in Hz.
pub const PIPELINE_RATE: u32 = 16_000;
/// Fixed analysis duration in seconds.
pub const TARGET_DURATION_S: f64 = 7.52;
/// `round(7.52 * 16000)`.
pub const TARGET_SAMPLES: usize = 120_320;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("WAV file contains no samples")]
    EmptyAudio,
    #[error("clip must be at {expected} Hz before conditioning, got {actual} Hz")]
    WrongRate { expected: u32, actual: u32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Mono audio at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub source_path: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32, source_path: String) -> Self {
        Self {
            samples,
            sample_rate,
            source_path,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// A clip at [`PIPELINE_RATE`] holding exactly [`TARGET_SAMPLES`] samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedClip {
    pub samples: Vec<f64>,
    pub original_duration_s: f64,
    pub padded: bool,
    pub cropped: bool,
}

impl ConditionedClip {
    pub fn sample_rate(&self) -> u32 {
        PIPELINE_RATE
    }

    /// Wrap an already-conditioned sample buffer (e.g. synthetic test signals).
    ///
    /// Panics if `samples` is not exactly [`TARGET_SAMPLES`] long.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        assert_eq!(
            samples.len(),
            TARGET_SAMPLES,
            "conditioned clips are fixed length"
        );
        Self {
            samples,
            original_duration_s: TARGET_DURATION_S,
            padded: false,
            cropped: false,
        }
    }

    /// View as a plain clip, e.g. to condition it again.
    pub fn to_clip(&self) -> AudioClip {
        AudioClip::new(self.samples.clone(), PIPELINE_RATE, String::new())
    }
}

/// Pad with trailing zeros or crop to the first 7.52 s.
pub fn condition(clip: &AudioClip) -> Result<ConditionedClip, AudioError> {
    if clip.sample_rate != PIPELINE_RATE {
        return Err(AudioError::WrongRate {
            expected: PIPELINE_RATE,
            actual: clip.sample_rate,
        });
    }
    let n = clip.samples.len();
    let mut samples = clip.samples.clone();
    samples.resize(TARGET_SAMPLES, 0.0);
    Ok(ConditionedClip {
        samples,
        original_duration_s: clip.duration_s(),
        padded: n < TARGET_SAMPLES,
        cropped: n > TARGET_SAMPLES,
    })
}

/// Decode, resample to 16 kHz and condition in one step.
pub fn load_conditioned(path: impl AsRef<std::path::Path>) -> Result<ConditionedClip, AudioError> {
    let clip = decode_wav(path)?;
    condition(&resample(&clip, PIPELINE_RATE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(n: usize) -> AudioClip {
        AudioClip::new(
            (0..n).map(|i| ((i % 7) as f64 - 3.0) / 8.0).collect(),
            PIPELINE_RATE,
            String::new(),
        )
    }

    #[test]
    fn target_constant_matches_duration() {
        assert_eq!(
            (TARGET_DURATION_S * PIPELINE_RATE as f64).round() as usize,
            TARGET_SAMPLES
        );
    }

    #[test]
    fn pads_short_clip_at_tail() {
        let c = condition(&clip(48_000)).unwrap();
        assert_eq!(c.samples.len(), TARGET_SAMPLES);
        assert!(c.samples[48_000..].iter().all(|&s| s == 0.0));
        assert_eq!(TARGET_SAMPLES - 48_000, 72_320);
        assert!(c.padded && !c.cropped);
        assert!((c.original_duration_s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_length_is_untouched() {
        let src = clip(TARGET_SAMPLES);
        let c = condition(&src).unwrap();
        assert_eq!(c.samples, src.samples);
        assert!(!c.padded && !c.cropped);
    }

    #[test]
    fn crops_long_clip_keeping_start() {
        let src = clip(160_000);
        let c = condition(&src).unwrap();
        assert_eq!(c.samples[..], src.samples[..TARGET_SAMPLES]);
        assert!(c.cropped && !c.padded);
    }

    #[test]
    fn wrong_rate_is_rejected() {
        let c = AudioClip::new(vec![0.0; 10], 44_100, String::new());
        assert!(matches!(
            condition(&c),
            Err(AudioError::WrongRate { actual: 44_100, .. })
        ));
    }
}

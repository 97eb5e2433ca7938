//! Signal-processing substrate: framing, windowing, FFT and mel filterbank.

mod fft;
mod frame;
mod mel;
mod window;

use thiserror::Error;

pub use fft::{fft_magnitude, FftPlan, Spectrum};
pub use frame::{fft_size_for, frame_samples, frame_signal, FrameMatrix, SUPPORTED_FRAME_MS};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use window::{apply_window, window, WindowKind};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("unsupported frame length {0} ms (expected 32 or 100)")]
    UnsupportedFrameLength(u32),
    #[error("signal of {samples} samples is shorter than one {frame_len}-sample frame")]
    SignalTooShort { samples: usize, frame_len: usize },
    #[error("FFT size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("frame of {frame_len} samples does not fit FFT size {fft_size}")]
    FrameTooLong { frame_len: usize, fft_size: usize },
    #[error("invalid band: fmin {fmin} Hz must be below fmax {fmax} Hz and within [0, nyquist]")]
    BadBand { fmin: f64, fmax: f64 },
}

use crate::audio::{ConditionedClip, PIPELINE_RATE};

use super::DspError;

/// Frame lengths the pipeline is configured for.
pub const SUPPORTED_FRAME_MS: [u32; 2] = [32, 100];

/// Overlapping frames stored row-major, `num_frames × frame_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub data: Vec<f64>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl FrameMatrix {
    pub fn num_frames(&self) -> usize {
        self.data.len().checked_div(self.frame_len).unwrap_or(0)
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.frame_len)
    }
}

/// FFT size used for a frame length: the smallest power of two holding the frame.
pub fn fft_size_for(frame_len: usize) -> usize {
    frame_len.next_power_of_two()
}

/// Split `samples` into frames of `frame_len` with the given hop; the ragged tail is dropped.
pub fn frame_samples(
    samples: &[f64],
    frame_len: usize,
    hop: usize,
    sample_rate: u32,
) -> Result<FrameMatrix, DspError> {
    if samples.len() < frame_len || frame_len == 0 {
        return Err(DspError::SignalTooShort {
            samples: samples.len(),
            frame_len,
        });
    }
    let num_frames = (samples.len() - frame_len) / hop + 1;
    let mut data = Vec::with_capacity(num_frames * frame_len);
    for i in 0..num_frames {
        data.extend_from_slice(&samples[i * hop..i * hop + frame_len]);
    }
    Ok(FrameMatrix {
        data,
        frame_len,
        hop,
        sample_rate,
    })
}

/// Frame a conditioned clip at 32 or 100 ms with 50 % overlap.
pub fn frame_signal(clip: &ConditionedClip, frame_ms: u32) -> Result<FrameMatrix, DspError> {
    if !SUPPORTED_FRAME_MS.contains(&frame_ms) {
        return Err(DspError::UnsupportedFrameLength(frame_ms));
    }
    let frame_len = (frame_ms * PIPELINE_RATE / 1000) as usize;
    frame_samples(&clip.samples, frame_len, frame_len / 2, PIPELINE_RATE)
}

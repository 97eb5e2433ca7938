//! Minimal RIFF/WAVE reader and writer for 16-bit PCM.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AudioClip, AudioError};

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Scale used both ways so that decode followed by encode is exact.
const PCM16_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode a WAV file into a mono clip normalized to [-1, 1].
pub fn decode_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| AudioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut clip = decode_wav_bytes(&bytes)?;
    clip.source_path = path.display().to_string();
    Ok(clip)
}

/// Decode an in-memory WAV image. `source_path` is left empty.
pub fn decode_wav_bytes(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedContainer(
            "missing RIFF/WAVE magic".into(),
        ));
    }
    let riff_size = read_u32(bytes, 4) as usize;
    if riff_size + 8 > bytes.len() {
        return Err(AudioError::MalformedContainer(format!(
            "RIFF size {} exceeds file length {}",
            riff_size,
            bytes.len()
        )));
    }
    let end = riff_size + 8;

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= end)
            .ok_or_else(|| {
                AudioError::MalformedContainer(format!(
                    "chunk {:?} of size {} overruns container",
                    String::from_utf8_lossy(id),
                    size
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::MalformedContainer("fmt chunk too short".into()));
                }
                let mut format_tag = read_u16(body, 0);
                if format_tag == WAVE_FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(AudioError::MalformedContainer(
                            "extensible fmt chunk too short".into(),
                        ));
                    }
                    // first two bytes of the subformat GUID carry the plain format tag
                    format_tag = read_u16(body, 24);
                }
                fmt = Some(FmtChunk {
                    format_tag,
                    channels: read_u16(body, 2),
                    sample_rate: read_u32(body, 4),
                    bits_per_sample: read_u16(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| AudioError::MalformedContainer("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::MalformedContainer("no data chunk".into()))?;

    if fmt.format_tag != WAVE_FORMAT_PCM {
        return Err(AudioError::UnsupportedEncoding(format!(
            "format tag {:#06x}",
            fmt.format_tag
        )));
    }
    if fmt.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} bits per sample",
            fmt.bits_per_sample
        )));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} channels",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(AudioError::MalformedContainer("zero sample rate".into()));
    }

    let channels = fmt.channels as usize;
    let frame_bytes = 2 * channels;
    let num_frames = data.len() / frame_bytes;
    if num_frames == 0 {
        return Err(AudioError::EmptyAudio);
    }

    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / PCM16_SCALE)
                .sum();
            sum / channels as f64
        })
        .collect();

    Ok(AudioClip::new(samples, fmt.sample_rate, String::new()))
}

/// Quantize a float sample to 16-bit PCM with clipping.
pub fn quantize_pcm16(x: f64) -> i16 {
    (x * PCM16_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Encode mono samples as a canonical 44-byte-header PCM16 WAV image.
pub fn encode_wav_bytes(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    encode_pcm16_interleaved(
        &samples
            .iter()
            .map(|&x| quantize_pcm16(x))
            .collect::<Vec<_>>(),
        1,
        sample_rate,
    )
}

/// Encode already-quantized interleaved PCM16 frames.
pub fn encode_pcm16_interleaved(pcm: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data_len = (pcm.len() * 2) as u32;
    let block_align = channels * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in pcm {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Write mono samples to `path` as PCM16.
pub fn write_wav(
    path: impl AsRef<Path>,
    samples: &[f64],
    sample_rate: u32,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    let bytes = encode_wav_bytes(samples, sample_rate);
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|source| AudioError::Io {
            path: path.display().to_string(),
            source,
        })
}

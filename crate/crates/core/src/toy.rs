//! Synthetic five-class corpus of vocal-like signals for dataset-free runs.
//!
//! Each class has its own pitch range and contour, spectral tilt, amplitude
//! modulation rate and breath noise. Every clip is voiced for 4 to 5.5 s and
//! ends in digital silence, so conditioned clips carry at least 2 s of zeros.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::audio::{write_wav, AudioError};
use crate::harness::{write_manifest_csv, Emotion, HarnessError, Manifest, ManifestEntry};
use crate::nn::NnRng;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpusConfig {
    pub seed: u64,
    pub per_class: usize,
    pub sample_rate: u32,
}

impl Default for ToyCorpusConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            per_class: 40,
            sample_rate: 16_000,
        }
    }
}

struct Voice {
    f0: f64,
    /// Relative pitch change over the voiced span.
    glide: f64,
    /// Harmonic amplitudes fall as `h^-tilt`.
    tilt: f64,
    am_rate: f64,
    am_depth: f64,
    noise: f64,
}

fn voice(e: Emotion) -> Voice {
    let v = |f0, glide, tilt, am_rate, am_depth, noise| Voice {
        f0,
        glide,
        tilt,
        am_rate,
        am_depth,
        noise,
    };
    match e {
        Emotion::Anger => v(210.0, 0.0, 0.6, 7.0, 0.5, 0.03),
        Emotion::Happiness => v(260.0, 0.25, 1.0, 4.0, 0.3, 0.01),
        Emotion::Neutral => v(140.0, -0.05, 1.4, 2.0, 0.15, 0.005),
        Emotion::Sadness => v(105.0, -0.15, 2.2, 1.0, 0.1, 0.002),
        Emotion::Surprise | Emotion::Fear => v(330.0, 0.5, 1.0, 9.0, 0.6, 0.01),
    }
}

/// Voiced segment followed by 0.5 s of zeros.
pub fn synthesize(label: Emotion, rng: &mut NnRng, sample_rate: u32) -> Vec<f64> {
    let p = voice(label);
    let fs = sample_rate as f64;
    let f0 = p.f0 * rng.random_range(0.9..1.1);
    let am_rate = p.am_rate * rng.random_range(0.85..1.15);
    let am_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let gain = rng.random_range(0.25..0.6);
    let voiced = (rng.random_range(4.0..5.5) * fs) as usize;
    let tail = (0.5 * fs) as usize;
    let noise = Normal::new(0.0, p.noise).expect("finite std");
    let max_hz = 4000.0_f64.min(0.45 * fs);
    let fade = (0.02 * fs) as usize;
    let max_harmonics = (max_hz / (f0 * (1.0 + p.glide.min(0.0)))).floor().max(1.0) as usize;
    let weights: Vec<f64> = (1..=max_harmonics)
        .map(|h| (h as f64).powf(-p.tilt))
        .collect();

    let mut out = Vec::with_capacity(voiced + tail);
    let mut phase = 0.0_f64;
    for n in 0..voiced {
        let t = n as f64 / fs;
        let pos = n as f64 / voiced as f64;
        let inst = f0 * (1.0 + p.glide * pos);
        phase = (phase + std::f64::consts::TAU * inst / fs) % std::f64::consts::TAU;
        // sin(hθ) by the Chebyshev recurrence
        let (s1, c1) = phase.sin_cos();
        let (mut prev, mut cur) = (0.0, s1);
        let mut x = 0.0;
        let harmonics = ((max_hz / inst).floor().max(1.0) as usize).min(max_harmonics);
        for w in &weights[..harmonics] {
            x += cur * w;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        let env =
            1.0 - p.am_depth * 0.5 * (1.0 + (std::f64::consts::TAU * am_rate * t + am_phase).sin());
        let ramp = (n.min(voiced - 1 - n) as f64 / fade as f64).min(1.0);
        out.push(gain * ramp * (0.5 * env * x + noise.sample(rng)));
    }
    let peak = out.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.95 {
        out.iter_mut().for_each(|v| *v *= 0.95 / peak);
    }
    out.resize(voiced + tail, 0.0);
    out
}

/// Write `per_class` clips per class as `<G><SS><L><NN>.wav` plus `manifest.csv`,
/// returning the manifest path. The same seed reproduces the corpus byte for byte.
pub fn generate_toy_corpus(
    out_dir: impl AsRef<Path>,
    config: &ToyCorpusConfig,
) -> Result<PathBuf, HarnessError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut rng = NnRng::seed_from_u64(config.seed);
    let mut entries = Vec::new();
    for label in Emotion::CLASSES {
        for i in 0..config.per_class {
            let speaker = i % 8 + 1;
            let gender = if speaker % 2 == 0 { "F" } else { "M" };
            let name = format!("{gender}{speaker:02}{}{:02}.wav", label.letter(), i / 8 + 1);
            let path = out_dir.join(&name);
            let samples = synthesize(label, &mut rng, config.sample_rate);
            write_wav(&path, &samples, config.sample_rate)
                .map_err(|e: AudioError| HarnessError::from(e))?;
            entries.push(ManifestEntry {
                path,
                label,
                speaker: Some(format!("{speaker:02}")),
                gender: Some(gender.into()),
            });
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest_csv(&manifest_path, &Manifest::from_entries(entries)?)?;
    Ok(manifest_path)
}

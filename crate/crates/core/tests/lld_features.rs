mod common;

use common::{random_vec, rng, sine};
use rand_distr::{Distribution, Normal};
use sertk::audio::{ConditionedClip, TARGET_SAMPLES};
use sertk::dsp::WindowKind;
use sertk::lld::{
    delta, extract_llds, feature_names, LldExtractor, COL_CENTROID, COL_RMS, COL_ZCR, NUM_LLDS,
    NUM_MFCC,
};

fn clip(samples: Vec<f64>) -> ConditionedClip {
    ConditionedClip::from_samples(samples)
}

fn white_noise(seed: u64, std: f64) -> Vec<f64> {
    let mut r = rng(seed);
    let n = Normal::new(0.0, std).unwrap();
    (0..TARGET_SAMPLES).map(|_| n.sample(&mut r)).collect()
}

#[test]
fn shapes_at_both_resolutions() {
    let c = clip(white_noise(1, 0.1));
    for (ms, frames) in [(32, 469), (100, 149)] {
        let m = extract_llds(&c, ms).unwrap();
        assert_eq!((m.num_frames, m.num_features()), (frames, NUM_LLDS));
        assert_eq!(m.feature_names, feature_names());
        assert_eq!(m.frame_ms, ms);
    }
}

#[test]
fn finite_on_silence_tones_and_noise() {
    let signals = [
        vec![0.0; TARGET_SAMPLES],
        sine(1000.0, 1.0, TARGET_SAMPLES, 16_000.0),
        sine(7900.0, 1.0, TARGET_SAMPLES, 16_000.0),
        sine(50.0, 1.0, TARGET_SAMPLES, 16_000.0),
        white_noise(2, 0.5)
            .into_iter()
            .map(|v| v.clamp(-1.0, 1.0))
            .collect(),
        vec![1.0; TARGET_SAMPLES],
    ];
    for s in signals {
        let c = clip(s);
        for ms in [32, 100] {
            for w in [
                WindowKind::Hamming,
                WindowKind::Hann,
                WindowKind::Rectangular,
            ] {
                let m = LldExtractor::new(ms, w).unwrap().extract(&c, "x").unwrap();
                assert!(m.all_finite());
            }
        }
    }
}

#[test]
fn one_khz_tone_centroid_and_zcr() {
    let m = extract_llds(&clip(sine(1000.0, 1.0, TARGET_SAMPLES, 16_000.0)), 32).unwrap();
    for t in 2..m.num_frames - 2 {
        assert!(
            (m.get(t, COL_CENTROID) - 1000.0).abs() < 15.0,
            "frame {t}: {}",
            m.get(t, COL_CENTROID)
        );
        assert!((m.get(t, COL_ZCR) - 2.0 * 1000.0 / 16_000.0).abs() < 0.01);
        assert!((m.get(t, COL_RMS) - 1.0 / 2f64.sqrt()).abs() < 0.01);
    }
}

#[test]
fn amplitude_scaling_moves_only_c0_and_rms() {
    let base = white_noise(3, 0.1);
    let loud: Vec<f64> = base.iter().map(|v| v * 4.0).collect();
    let a = extract_llds(&clip(base), 100).unwrap();
    let b = extract_llds(&clip(loud), 100).unwrap();
    // log energies shift by ln 16 in every filter, which the DCT maps onto c0 alone
    let shift = 16f64.ln() * 26f64.sqrt();
    for t in 0..a.num_frames {
        assert!((b.get(t, 0) - a.get(t, 0) - shift).abs() < 1e-8);
        for j in 1..NUM_MFCC {
            assert!((b.get(t, j) - a.get(t, j)).abs() < 1e-8);
        }
        for j in NUM_MFCC..3 * NUM_MFCC {
            assert!((b.get(t, j) - a.get(t, j)).abs() < 1e-8);
        }
        assert!((b.get(t, COL_RMS) - 4.0 * a.get(t, COL_RMS)).abs() < 1e-12);
        assert_eq!(b.get(t, COL_ZCR), a.get(t, COL_ZCR));
        for j in COL_CENTROID..COL_RMS {
            assert!((b.get(t, j) - a.get(t, j)).abs() < 1e-6 * (1.0 + a.get(t, j).abs()));
        }
        for j in COL_ZCR + 1..NUM_LLDS {
            assert!((b.get(t, j) - a.get(t, j)).abs() < 1e-8);
        }
    }
}

#[test]
fn delta_matches_direct_formula() {
    let mut r = rng(4);
    let (frames, dims) = (10, 3);
    let x = random_vec(&mut r, frames * dims, 1.0);
    let got = delta(&x, frames, dims, 2);
    let at = |t: i64, d: usize| x[t.clamp(0, frames as i64 - 1) as usize * dims + d];
    for t in 0..frames as i64 {
        for d in 0..dims {
            let expected =
                (1.0 * (at(t + 1, d) - at(t - 1, d)) + 2.0 * (at(t + 2, d) - at(t - 2, d))) / 10.0;
            assert!((got[t as usize * dims + d] - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn delta_columns_are_deltas_of_the_cepstra() {
    let m = extract_llds(&clip(white_noise(5, 0.2)), 100).unwrap();
    let n = m.num_frames;
    let cep: Vec<f64> = (0..n).flat_map(|t| m.row(t)[..NUM_MFCC].to_vec()).collect();
    let d1 = delta(&cep, n, NUM_MFCC, 2);
    let d2 = delta(&d1, n, NUM_MFCC, 2);
    for t in 0..n {
        for j in 0..NUM_MFCC {
            assert_eq!(m.get(t, NUM_MFCC + j), d1[t * NUM_MFCC + j]);
            assert_eq!(m.get(t, 2 * NUM_MFCC + j), d2[t * NUM_MFCC + j]);
        }
    }
}

#[test]
fn trailing_silence_frames_have_zero_time_domain_features() {
    let mut s = sine(300.0, 0.5, 60_000, 16_000.0);
    s.resize(TARGET_SAMPLES, 0.0);
    let m = extract_llds(&clip(s), 32).unwrap();
    let first_silent = 60_000 / 256 + 1;
    for t in first_silent..m.num_frames {
        assert_eq!(m.get(t, COL_RMS), 0.0);
        assert_eq!(m.get(t, COL_ZCR), 0.0);
        assert_eq!(m.get(t, COL_CENTROID), 0.0);
    }
    assert!(m.get(10, COL_RMS) > 0.3);
}

#[test]
fn extraction_is_deterministic() {
    let c = clip(white_noise(6, 0.3));
    let a = extract_llds(&c, 32).unwrap();
    let b = extract_llds(&c, 32).unwrap();
    assert_eq!(a.values, b.values);
}

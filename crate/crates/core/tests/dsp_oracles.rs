mod common;

use common::{naive_dct2, naive_dft_magnitude, random_vec, rel_error, rng, sine};
use sertk::dsp::{
    apply_window, fft_magnitude, frame_samples, window, FftPlan, MelFilterbank, Spectrum,
    WindowKind,
};
use sertk::lld::{cepstrum, spectral_descriptors, Dct, NUM_MEL_FILTERS, NUM_MFCC};

#[test]
fn fft_matches_naive_dft_on_random_frames() {
    let mut r = rng(11);
    for _ in 0..200 {
        let frame = random_vec(&mut r, 512, 1.0);
        let fast = fft_magnitude(&frame, 512, 16_000).unwrap();
        let slow = naive_dft_magnitude(&frame, 512);
        assert!(rel_error(&fast.magnitudes, &slow) < 1e-9);
    }
}

#[test]
fn zero_padded_100ms_frame_matches_dft() {
    let mut r = rng(12);
    for _ in 0..5 {
        let frame = random_vec(&mut r, 1600, 1.0);
        let fast = fft_magnitude(&frame, 2048, 16_000).unwrap();
        assert_eq!(fast.magnitudes.len(), 1025);
        assert!(rel_error(&fast.magnitudes, &naive_dft_magnitude(&frame, 2048)) < 1e-9);
    }
}

#[test]
fn parseval_holds_for_full_spectrum() {
    let mut r = rng(13);
    let x = random_vec(&mut r, 512, 1.0);
    let plan = FftPlan::new(512).unwrap();
    let mut re = x.clone();
    let mut im = vec![0.0; 512];
    plan.forward(&mut re, &mut im);
    let time: f64 = x.iter().map(|v| v * v).sum();
    let freq: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum::<f64>() / 512.0;
    assert!((time - freq).abs() < 1e-9 * time);
}

#[test]
fn fft_is_linear() {
    let mut r = rng(14);
    let plan = FftPlan::new(256).unwrap();
    let a = random_vec(&mut r, 256, 1.0);
    let b = random_vec(&mut r, 256, 1.0);
    let run = |x: &[f64]| {
        let mut re = x.to_vec();
        let mut im = vec![0.0; x.len()];
        plan.forward(&mut re, &mut im);
        (re, im)
    };
    let combined: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
    let (ra, ia) = run(&a);
    let (rb, ib) = run(&b);
    let (rc, ic) = run(&combined);
    for k in 0..256 {
        assert!((rc[k] - (2.0 * ra[k] - 0.5 * rb[k])).abs() < 1e-10);
        assert!((ic[k] - (2.0 * ia[k] - 0.5 * ib[k])).abs() < 1e-10);
    }
}

#[test]
fn dct_matches_naive_definition() {
    let mut r = rng(15);
    let dct = Dct::new(NUM_MEL_FILTERS, NUM_MFCC);
    for _ in 0..100 {
        let x = random_vec(&mut r, NUM_MEL_FILTERS, 20.0);
        assert!(rel_error(&dct.apply(&x), &naive_dct2(&x, NUM_MFCC)) < 1e-9);
    }
}

#[test]
fn full_dct_is_orthonormal() {
    let mut r = rng(16);
    let dct = Dct::new(26, 26);
    let x = random_vec(&mut r, 26, 1.0);
    let y = dct.apply(&x);
    let ex: f64 = x.iter().map(|v| v * v).sum();
    let ey: f64 = y.iter().map(|v| v * v).sum();
    assert!((ex - ey).abs() < 1e-12 * ex);
}

#[test]
fn cepstrum_is_dct_of_log_energies() {
    let mut r = rng(17);
    let dct = Dct::new(NUM_MEL_FILTERS, NUM_MFCC);
    let energies: Vec<f64> = random_vec(&mut r, NUM_MEL_FILTERS, 1.0)
        .iter()
        .map(|v| v.abs() + 1e-3)
        .collect();
    let logs: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
    assert!(rel_error(&cepstrum(&energies, &dct), &naive_dct2(&logs, NUM_MFCC)) < 1e-12);
}

#[test]
fn one_khz_tone_peaks_in_the_matching_mel_filter() {
    let frame = sine(1000.0, 1.0, 512, 16_000.0);
    let windowed: Vec<f64> = frame
        .iter()
        .zip(window(WindowKind::Hamming, 512))
        .map(|(x, w)| x * w)
        .collect();
    let spectrum = fft_magnitude(&windowed, 512, 16_000).unwrap();
    let bank = MelFilterbank::new(26, 512, 16_000, 0.0, 8000.0).unwrap();
    let energies = bank.apply(&spectrum);
    let best = (0..26)
        .max_by(|&a, &b| energies[a].total_cmp(&energies[b]))
        .unwrap();
    let edges = bank.edges_hz();
    assert!(edges[best] < 1000.0 && 1000.0 < edges[best + 2]);
    let nearest = (0..26)
        .min_by(|&a, &b| {
            (bank.centers_hz()[a] - 1000.0)
                .abs()
                .total_cmp(&(bank.centers_hz()[b] - 1000.0).abs())
        })
        .unwrap();
    assert_eq!(best, nearest);
}

#[test]
fn centroid_of_sines() {
    for freq in [500.0, 1000.0, 3000.0] {
        let frame = sine(freq, 0.8, 512, 16_000.0);
        let windowed: Vec<f64> = frame
            .iter()
            .zip(window(WindowKind::Hamming, 512))
            .map(|(x, w)| x * w)
            .collect();
        let s = spectral_descriptors(&fft_magnitude(&windowed, 512, 16_000).unwrap());
        assert!((s.centroid - freq).abs() < 15.0, "{freq}: {}", s.centroid);
    }
}

#[test]
fn centroid_is_weighted_mean_frequency() {
    let mut r = rng(18);
    let mags: Vec<f64> = random_vec(&mut r, 257, 1.0)
        .iter()
        .map(|v| v.abs())
        .collect();
    let s = Spectrum::from_magnitudes(mags.clone(), 16_000);
    let total: f64 = mags.iter().sum();
    let expected = mags
        .iter()
        .enumerate()
        .map(|(k, m)| k as f64 * 31.25 * m)
        .sum::<f64>()
        / total;
    assert!((spectral_descriptors(&s).centroid - expected).abs() < 1e-9);
}

#[test]
fn windowing_framed_signal_multiplies_every_frame() {
    let x: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.01).sin()).collect();
    let frames = frame_samples(&x, 512, 256, 16_000).unwrap();
    let windowed = apply_window(&frames, WindowKind::Hamming);
    let w = window(WindowKind::Hamming, 512);
    for i in 0..frames.num_frames() {
        for j in 0..512 {
            assert_eq!(windowed.frame(i)[j], frames.frame(i)[j] * w[j]);
        }
    }
}

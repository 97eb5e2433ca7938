//! Benchmark-only crate; see `benches/`.

/// Deterministic test signal: two partials plus a slow chirp, at 16 kHz.
pub fn test_signal(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / 16_000.0;
            0.4 * (std::f64::consts::TAU * 220.0 * t).sin()
                + 0.2 * (std::f64::consts::TAU * 1330.0 * t).sin()
                + 0.1 * (std::f64::consts::TAU * (300.0 + 400.0 * t) * t).sin()
        })
        .collect()
}

/// Regression deltas along the frame axis of a row-major `frames × dims` track.
///
/// `d_t = Σ_{n=1..W} n (x_{t+n} − x_{t−n}) / (2 Σ n²)` with edge frames replicated.
pub fn delta(track: &[f64], frames: usize, dims: usize, width: usize) -> Vec<f64> {
    assert_eq!(track.len(), frames * dims, "track shape mismatch");
    assert!(width >= 1, "delta width must be at least 1");
    if frames == 0 {
        return Vec::new();
    }
    let denom = 2.0 * (1..=width).map(|n| (n * n) as f64).sum::<f64>();
    let last = frames as isize - 1;
    let at = |t: isize, d: usize| track[t.clamp(0, last) as usize * dims + d];
    let mut out = vec![0.0; frames * dims];
    for t in 0..frames as isize {
        for d in 0..dims {
            let num: f64 = (1..=width as isize)
                .map(|n| n as f64 * (at(t + n, d) - at(t - n, d)))
                .sum();
            out[t as usize * dims + d] = num / denom;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_track_has_zero_delta() {
        assert!(delta(&[4.0; 30], 10, 3, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ramp_has_unit_interior_delta() {
        let ramp: Vec<f64> = (0..12).map(|t| t as f64).collect();
        let d = delta(&ramp, 12, 1, 2);
        for &v in &d[2..10] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        // replicated edges flatten the slope at the boundary
        assert!(d[0] < 1.0 && d[11] < 1.0);
    }
}

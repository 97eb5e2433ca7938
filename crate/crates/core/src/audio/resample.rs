//! Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.

use super::AudioClip;

/// Cutoff as a fraction of the lower of the two Nyquist frequencies.
const CUTOFF_FRACTION: f64 = 0.95;
/// Sinc zero crossings on each side of the kernel centre.
const ZERO_CROSSINGS: f64 = 64.0;
/// Kaiser shape for roughly 80 dB stopband rejection.
const KAISER_BETA: f64 = 7.857;
/// Kernel table resolution, entries per input sample.
const TABLE_DENSITY: f64 = 2048.0;

/// Zeroth-order modified Bessel function of the first kind (power series).
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let half_sq = (x / 2.0) * (x / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= half_sq / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

struct SincKernel {
    table: Vec<f64>,
    radius: f64,
}

impl SincKernel {
    /// `bandwidth` is the cutoff expressed as a fraction of the input sample rate times two.
    fn new(bandwidth: f64) -> Self {
        let radius = ZERO_CROSSINGS / bandwidth;
        let len = (radius * TABLE_DENSITY).ceil() as usize + 2;
        let norm = bessel_i0(KAISER_BETA);
        let table = (0..len)
            .map(|i| {
                let tau = i as f64 / TABLE_DENSITY;
                let r = tau / radius;
                if r >= 1.0 {
                    0.0
                } else {
                    let w = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm;
                    bandwidth * sinc(bandwidth * tau) * w
                }
            })
            .collect();
        Self { table, radius }
    }

    #[inline]
    fn eval(&self, tau: f64) -> f64 {
        let pos = tau.abs() * TABLE_DENSITY;
        let i = pos as usize;
        if i + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        self.table[i] + frac * (self.table[i + 1] - self.table[i])
    }
}

/// Length of the resampled output.
pub fn resampled_len(len: usize, from_rate: u32, to_rate: u32) -> usize {
    (len as f64 * to_rate as f64 / from_rate as f64).round() as usize
}

/// Resample `samples` from `from_rate` to `to_rate`.
pub fn resample_samples(samples: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    assert!(
        from_rate > 0 && to_rate > 0,
        "sample rates must be positive"
    );
    if from_rate == to_rate {
        return samples.to_vec();
    }
    let out_len = resampled_len(samples.len(), from_rate, to_rate);
    let ratio = from_rate as f64 / to_rate as f64;
    let bandwidth = CUTOFF_FRACTION * (to_rate.min(from_rate) as f64 / from_rate as f64);
    let kernel = SincKernel::new(bandwidth);
    let last = samples.len() as isize - 1;

    (0..out_len)
        .map(|j| {
            let t = j as f64 * ratio;
            let lo = ((t - kernel.radius).ceil() as isize).max(0);
            let hi = ((t + kernel.radius).floor() as isize).min(last);
            let mut acc = 0.0;
            for k in lo..=hi {
                acc += samples[k as usize] * kernel.eval(t - k as f64);
            }
            acc
        })
        .collect()
}

/// Resample a clip, clamping the output into [-1, 1].
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    if clip.sample_rate == target_rate {
        return clip.clone();
    }
    let samples = resample_samples(&clip.samples, clip.sample_rate, target_rate)
        .into_iter()
        .map(|s| s.clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(samples, target_rate, clip.source_path.clone())
}

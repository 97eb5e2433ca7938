use rand::Rng;

use super::NnRng;

/// `sqrt(6 / (fan_in + fan_out))`
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fill with draws from U(−limit, limit).
pub fn uniform_fill(data: &mut [f64], limit: f64, rng: &mut NnRng) {
    for v in data {
        *v = rng.random_range(-limit..=limit);
    }
}

/// Every statistic the functional catalogue draws from, computed in one pass set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub variance: f64,
    pub median: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub slope: f64,
    pub offset: f64,
    pub residual_mse: f64,
}

/// Relative threshold under which the second moment is treated as exactly zero.
const ZERO_VARIANCE_REL: f64 = 1e-24;

/// Statistics of a trajectory with at least two frames.
pub fn column_stats(x: &[f64]) -> ColumnStats {
    let n = x.len();
    assert!(n >= 2, "column_stats needs at least two frames");
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let degenerate = m2 <= ZERO_VARIANCE_REL * (1.0 + mean * mean);
    let (variance, skewness, kurtosis) = if degenerate {
        (0.0, 0.0, 0.0)
    } else {
        (m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };

    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    // regression against t = i / (n - 1)
    let t_mean = 0.5;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let dt = i as f64 / (nf - 1.0) - t_mean;
        sxy += dt * (v - mean);
        sxx += dt * dt;
    }
    let slope = if degenerate { 0.0 } else { sxy / sxx };
    let offset = mean - slope * t_mean;
    let residual_mse = if degenerate {
        0.0
    } else {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let r = v - (offset + slope * i as f64 / (nf - 1.0));
                r * r
            })
            .sum::<f64>()
            / nf
    };

    ColumnStats {
        mean,
        max,
        min,
        variance,
        median,
        skewness,
        kurtosis,
        slope,
        offset,
        residual_mse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(column_stats(&[3.0, 1.0, 2.0]).median, 2.0);
        assert_eq!(column_stats(&[4.0, 1.0, 2.0, 3.0]).median, 2.5);
    }

    #[test]
    fn near_constant_column_is_degenerate() {
        let s = column_stats(&[0.1; 469]);
        assert_eq!(
            (s.variance, s.skewness, s.kurtosis, s.slope),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!((s.offset - 0.1).abs() < 1e-15);
    }

    #[test]
    fn symmetric_two_point_distribution() {
        let s = column_stats(&[-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.kurtosis, -2.0);
    }
}

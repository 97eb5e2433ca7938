use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::FrameMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Hamming,
    Hann,
    Rectangular,
}

/// Symmetric window coefficients of length `n`.
pub fn window(kind: WindowKind, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let c = (2.0 * PI * i as f64 / denom).cos();
            match kind {
                WindowKind::Hamming => 0.54 - 0.46 * c,
                WindowKind::Hann => 0.5 - 0.5 * c,
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect()
}

/// Multiply every frame elementwise by the window.
pub fn apply_window(frames: &FrameMatrix, kind: WindowKind) -> FrameMatrix {
    let w = window(kind, frames.frame_len);
    let data = frames
        .rows()
        .flat_map(|row| row.iter().zip(&w).map(|(x, c)| x * c))
        .collect();
    FrameMatrix {
        data,
        ..frames.clone()
    }
}

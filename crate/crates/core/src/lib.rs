//! Speech emotion recognition toolkit.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`audio`] decodes WAV, resamples to 16 kHz and fixes every clip at 7.52 s.
//! 2. [`lld`] frames the clip at 32 ms or 100 ms (50 % overlap) and computes
//!    52 hand-crafted descriptors per frame, on top of [`dsp`].
//! 3. [`functionals`] optionally collapses the frame matrix into one
//!    utterance-level vector.
//! 4. [`models`] (built on [`nn`]) classify the result, and [`harness`]
//!    trains, evaluates and reports UA/WA over experiment grids.

pub mod audio;
pub mod dsp;
pub mod functionals;
pub mod harness;
pub mod lld;
pub mod models;
pub mod nn;
pub mod toy;

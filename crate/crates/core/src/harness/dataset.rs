use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HarnessError, Manifest};
use crate::functionals::{apply_functionals, builtin_set, import_feature_csv};
use crate::lld::{read_lld, read_lld_csv};
use crate::nn::Tensor;

/// Where an experiment's per-utterance inputs come from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSource {
    /// Extracted hand-crafted LLD matrices, frame-level.
    #[default]
    Lld,
    /// A named functional set applied to the extracted LLD matrices.
    Functionals { set: String },
    /// One LLD CSV per clip (`<clip_id>.csv`) from an external extractor.
    LldCsv { dir: PathBuf },
    /// Precomputed utterance-level vectors with a `clip_id` column.
    FeatureCsv { path: PathBuf },
}

impl FeatureSource {
    pub fn is_frame_level(&self) -> bool {
        matches!(self, FeatureSource::Lld | FeatureSource::LldCsv { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            FeatureSource::Lld => "lld".into(),
            FeatureSource::Functionals { set } => set.clone(),
            FeatureSource::LldCsv { dir } => format!("lld_csv:{}", dir.display()),
            FeatureSource::FeatureCsv { path } => format!("feature_csv:{}", path.display()),
        }
    }

    /// Resolve relative paths against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        match self {
            FeatureSource::LldCsv { dir } => FeatureSource::LldCsv {
                dir: base.join(dir),
            },
            FeatureSource::FeatureCsv { path } => FeatureSource::FeatureCsv {
                path: base.join(path),
            },
            other => other.clone(),
        }
    }
}

/// `<features_dir>/lld_<ms>ms`
pub fn lld_dir(features_dir: &Path, frame_ms: u32) -> PathBuf {
    features_dir.join(format!("lld_{frame_ms}ms"))
}

pub fn lld_path(features_dir: &Path, frame_ms: u32, clip_id: &str) -> PathBuf {
    lld_dir(features_dir, frame_ms).join(format!("{clip_id}.lld"))
}

/// Per-sample inputs keyed by clip id.
pub type FeatureStore = HashMap<String, Tensor>;

/// Load inputs for every manifest entry from `source`.
pub fn load_features(
    source: &FeatureSource,
    features_dir: &Path,
    frame_ms: u32,
    manifest: &Manifest,
) -> Result<FeatureStore, HarnessError> {
    let ids: Vec<String> = manifest.entries.iter().map(|e| e.clip_id()).collect();
    let missing = |id: &str| HarnessError::FeatureMissing(id.to_string());
    match source {
        FeatureSource::FeatureCsv { path } => {
            let vectors = import_feature_csv(path, None)?;
            let mut all: HashMap<String, Tensor> = vectors
                .into_iter()
                .map(|v| {
                    let n = v.values.len();
                    (
                        v.clip_id,
                        Tensor::new(vec![n], v.values).expect("vector length"),
                    )
                })
                .collect();
            ids.iter()
                .map(|id| {
                    all.remove(id)
                        .map(|t| (id.clone(), t))
                        .ok_or_else(|| missing(id))
                })
                .collect()
        }
        FeatureSource::Lld | FeatureSource::Functionals { .. } | FeatureSource::LldCsv { .. } => {
            let set = match source {
                FeatureSource::Functionals { set } => Some(builtin_set(set)?),
                _ => None,
            };
            ids.par_iter()
                .map(|id| {
                    let m = match source {
                        FeatureSource::LldCsv { dir } => {
                            let p = dir.join(format!("{id}.csv"));
                            if !p.is_file() {
                                return Err(missing(id));
                            }
                            read_lld_csv(p, frame_ms)?
                        }
                        _ => {
                            let p = lld_path(features_dir, frame_ms, id);
                            if !p.is_file() {
                                return Err(missing(id));
                            }
                            read_lld(p)?
                        }
                    };
                    let t = match &set {
                        Some(set) => {
                            let v = apply_functionals(&m, set)?;
                            let n = v.values.len();
                            Tensor::new(vec![n], v.values)?
                        }
                        None => Tensor::new(vec![m.num_frames, m.num_features()], m.values)?,
                    };
                    Ok((id.clone(), t))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub clip_id: String,
    pub label: usize,
    pub input: Tensor,
}

/// Labelled inputs sharing one per-sample shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub input_shape: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self, HarnessError> {
        let input_shape = samples
            .first()
            .map(|s| s.input.shape().to_vec())
            .unwrap_or_default();
        if let Some(s) = samples
            .iter()
            .find(|s| s.input.shape() != input_shape.as_slice())
        {
            return Err(HarnessError::ConfigInvalid(format!(
                "clip {} has input shape {:?}, expected {:?}",
                s.clip_id,
                s.input.shape(),
                input_shape
            )));
        }
        Ok(Self {
            samples,
            input_shape,
        })
    }

    /// Gather manifest entries from a feature store, in manifest order.
    pub fn from_manifest(manifest: &Manifest, store: &FeatureStore) -> Result<Self, HarnessError> {
        let samples = manifest
            .entries
            .iter()
            .map(|e| {
                let id = e.clip_id();
                let input = store
                    .get(&id)
                    .cloned()
                    .ok_or(HarnessError::FeatureMissing(id.clone()))?;
                Ok(Sample {
                    clip_id: id,
                    label: e.class_index(),
                    input,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Stack the samples at `indices` into a batch.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>), HarnessError> {
        let inputs: Vec<&Tensor> = indices.iter().map(|&i| &self.samples[i].input).collect();
        let labels = indices.iter().map(|&i| self.samples[i].label).collect();
        Ok((Tensor::stack(&inputs)?, labels))
    }
}

/// Per-feature z-scoring over the last input axis, fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let dim = *data.input_shape.last().unwrap_or(&0);
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        for s in &data.samples {
            for row in s.input.data().chunks_exact(dim) {
                sum.iter_mut().zip(row).for_each(|(a, v)| *a += v);
                count += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|v| v / count.max(1) as f64).collect();
        let mut sq = vec![0.0; dim];
        for s in &data.samples {
            for row in s.input.data().chunks_exact(dim) {
                for ((a, v), m) in sq.iter_mut().zip(row).zip(&mean) {
                    *a += (v - m) * (v - m);
                }
            }
        }
        let scale = sq
            .iter()
            .map(|v| {
                let sd = (v / count.max(1) as f64).sqrt();
                if sd > 1e-8 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, t: &Tensor) -> Tensor {
        let dim = self.mean.len();
        let mut out = t.clone();
        for row in out.data_mut().chunks_exact_mut(dim) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn apply_dataset(&self, data: &Dataset) -> Dataset {
        Dataset {
            samples: data
                .samples
                .iter()
                .map(|s| Sample {
                    clip_id: s.clip_id.clone(),
                    label: s.label,
                    input: self.apply(&s.input),
                })
                .collect(),
            input_shape: data.input_shape.clone(),
        }
    }

    pub fn state(&self) -> Vec<(String, Tensor)> {
        let n = self.mean.len();
        vec![
            (
                "input.mean".into(),
                Tensor::new(vec![n], self.mean.clone()).expect("1-d"),
            ),
            (
                "input.scale".into(),
                Tensor::new(vec![n], self.scale.clone()).expect("1-d"),
            ),
        ]
    }

    pub fn from_state(mean: &Tensor, scale: &Tensor) -> Self {
        Self {
            mean: mean.data().to_vec(),
            scale: scale.data().to_vec(),
        }
    }
}

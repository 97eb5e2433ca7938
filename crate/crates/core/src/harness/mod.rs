//! Experiment plumbing: manifests, splits, training with early stopping,
//! UA/WA metrics, and grids of experiments rendered as comparison tables.

mod dataset;
mod experiment;
mod extract;
mod grid;
mod manifest;
mod metrics;
mod split;
mod train;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use dataset::{
    lld_dir, lld_path, load_features, Dataset, FeatureSource, FeatureStore, Sample, Standardizer,
};
pub use experiment::{
    config_hash, evaluate_run, read_report_json, run_experiment, write_report_json,
    ExperimentConfig, RunOutcome,
};
pub use extract::{
    extract_manifest, functionals_csv_path, ExtractFailure, ExtractOptions, ExtractSummary,
};
pub use grid::{
    render_csv, render_table, run_grid, CellResult, GridCell, GridConfig, GridOutcome, Reference,
    TableRow,
};
pub use manifest::{
    load_manifest, write_manifest_csv, Emotion, Manifest, ManifestEntry, SHEMO_FILENAME_RULE,
};
pub use metrics::{compute_metrics, EvalReport, RunMetadata};
pub use split::{split, SplitConfig, SplitName, Splits};
pub use train::{
    predict_dataset, train_model, write_history_csv, EpochRecord, TrainConfig, TrainOutcome,
    TrainedModel, Trainer, EVAL_BATCH,
};

use crate::audio::AudioError;
use crate::functionals::FunctionalError;
use crate::lld::LldError;
use crate::models::ModelError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: usize, label: String },
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("manifest has no usable entries")]
    EmptyManifest,
    #[error("duplicate manifest path {}", .0.display())]
    DuplicatePath(PathBuf),
    #[error("duplicate clip id {0}")]
    DuplicateClipId(String),
    #[error("bad filename rule: {0}")]
    BadRule(String),
    #[error("class {class} has {count} entries, at least 3 are needed to split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    InvalidRatios([f64; 3]),
    #[error("{truth} truth labels vs {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0} out of range")]
    LabelOutOfRange(usize),
    #[error("no features for clip {0}")]
    FeatureMissing(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Lld(#[from] LldError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

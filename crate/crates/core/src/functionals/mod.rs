//! Statistical functionals collapsing an LLD matrix into one utterance-level vector.

mod stats;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lld::{delta, LldMatrix, DELTA_WIDTH};

pub use stats::{column_stats, ColumnStats};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("functionals need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid functional set: {0}")]
    InvalidSet(String),
    #[error("unknown functional set {0:?}")]
    UnknownSet(String),
    #[error("row {row}: expected {expected} features, found {actual}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("row {row}, column {column}: non-numeric cell {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("feature CSV has no clip_id column")]
    MissingClipId,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Statistic applied to one LLD trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Mean,
    Max,
    Min,
    Range,
    /// Population variance.
    Variance,
    Stddev,
    Median,
    Skewness,
    /// Excess kurtosis.
    Kurtosis,
    /// Least-squares slope against the time index normalized to [0, 1].
    LrSlope,
    LrOffset,
    /// Mean squared residual of the linear fit.
    LrMse,
}

impl Functional {
    pub const ALL: [Functional; 12] = [
        Functional::Mean,
        Functional::Max,
        Functional::Min,
        Functional::Range,
        Functional::Variance,
        Functional::Stddev,
        Functional::Median,
        Functional::Skewness,
        Functional::Kurtosis,
        Functional::LrSlope,
        Functional::LrOffset,
        Functional::LrMse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Mean => "mean",
            Functional::Max => "max",
            Functional::Min => "min",
            Functional::Range => "range",
            Functional::Variance => "variance",
            Functional::Stddev => "stddev",
            Functional::Median => "median",
            Functional::Skewness => "skewness",
            Functional::Kurtosis => "kurtosis",
            Functional::LrSlope => "lr_slope",
            Functional::LrOffset => "lr_offset",
            Functional::LrMse => "lr_mse",
        }
    }

    pub fn select(self, s: &ColumnStats) -> f64 {
        match self {
            Functional::Mean => s.mean,
            Functional::Max => s.max,
            Functional::Min => s.min,
            Functional::Range => s.max - s.min,
            Functional::Variance => s.variance,
            Functional::Stddev => s.variance.sqrt(),
            Functional::Median => s.median,
            Functional::Skewness => s.skewness,
            Functional::Kurtosis => s.kurtosis,
            Functional::LrSlope => s.slope,
            Functional::LrOffset => s.offset,
            Functional::LrMse => s.residual_mse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub name: String,
    pub functionals: Vec<Functional>,
    /// Append the delta trajectory of every LLD as extra columns.
    pub include_deltas: bool,
}

impl FunctionalSet {
    pub fn new(
        name: impl Into<String>,
        functionals: Vec<Functional>,
        include_deltas: bool,
    ) -> Result<Self, FunctionalError> {
        let set = Self {
            name: name.into(),
            functionals,
            include_deltas,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        if self.functionals.is_empty() {
            return Err(FunctionalError::InvalidSet(format!(
                "{}: no functionals",
                self.name
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.functionals.iter().find(|f| !seen.insert(**f)) {
            return Err(FunctionalError::InvalidSet(format!(
                "{}: duplicate functional {}",
                self.name,
                dup.name()
            )));
        }
        Ok(())
    }

    /// Output dimension for an LLD matrix with `num_llds` columns.
    pub fn dimension(&self, num_llds: usize) -> usize {
        let cols = if self.include_deltas {
            2 * num_llds
        } else {
            num_llds
        };
        cols * self.functionals.len()
    }
}

/// `hand_crafted_624` (52 × 12) and `large` (104 × 12, LLDs plus deltas).
pub fn builtin_sets() -> Vec<FunctionalSet> {
    vec![
        FunctionalSet {
            name: "hand_crafted_624".into(),
            functionals: Functional::ALL.to_vec(),
            include_deltas: false,
        },
        FunctionalSet {
            name: "large".into(),
            functionals: Functional::ALL.to_vec(),
            include_deltas: true,
        },
    ]
}

pub fn builtin_set(name: &str) -> Result<FunctionalSet, FunctionalError> {
    builtin_sets()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| FunctionalError::UnknownSet(name.into()))
}

/// Utterance-level feature vector with `<lld>__<functional>` names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub clip_id: String,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn apply_functionals(
    llds: &LldMatrix,
    set: &FunctionalSet,
) -> Result<FeatureVector, FunctionalError> {
    set.validate()?;
    let frames = llds.num_frames;
    if frames < 2 {
        return Err(FunctionalError::TooFewFrames(frames));
    }
    let d = llds.num_features();
    let mut columns: Vec<(String, Vec<f64>)> = (0..d)
        .map(|j| (llds.feature_names[j].clone(), llds.column(j)))
        .collect();
    if set.include_deltas {
        let deltas = delta(&llds.values, frames, d, DELTA_WIDTH);
        columns.extend((0..d).map(|j| {
            let track = (0..frames).map(|t| deltas[t * d + j]).collect();
            (format!("{}_de", llds.feature_names[j]), track)
        }));
    }

    let mut values = Vec::with_capacity(set.dimension(d));
    let mut names = Vec::with_capacity(set.dimension(d));
    for (lld, track) in &columns {
        let stats = column_stats(track);
        for f in &set.functionals {
            values.push(f.select(&stats));
            names.push(format!("{lld}__{}", f.name()));
        }
    }
    Ok(FeatureVector {
        values,
        names,
        clip_id: llds.clip_id.clone(),
    })
}

/// Write vectors as `clip_id,<names...>` with 17 significant digits.
pub fn export_feature_csv(
    path: impl AsRef<Path>,
    vectors: &[FeatureVector],
) -> Result<(), FunctionalError> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(first) = vectors.first() {
        w.write_record(std::iter::once("clip_id").chain(first.names.iter().map(String::as_str)))?;
    }
    for v in vectors {
        w.write_record(
            std::iter::once(v.clip_id.clone()).chain(v.values.iter().map(|x| format!("{x:.16e}"))),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a `clip_id,<name1>,...` CSV of numeric features.
pub fn import_feature_csv(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<Vec<FeatureVector>, FunctionalError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.first().map(String::as_str) != Some("clip_id") {
        return Err(FunctionalError::MissingClipId);
    }
    let names = headers[1..].to_vec();
    if let Some(expected) = expected_dim {
        if names.len() != expected {
            return Err(FunctionalError::DimensionMismatch {
                row: 0,
                expected,
                actual: names.len(),
            });
        }
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != headers.len() {
            return Err(FunctionalError::DimensionMismatch {
                row,
                expected: names.len(),
                actual: record.len().saturating_sub(1),
            });
        }
        let values = record
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(cell, column)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| FunctionalError::NonNumericCell {
                        row,
                        column: column.clone(),
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(FeatureVector {
            values,
            names: names.clone(),
            clip_id: record[0].trim().to_string(),
        });
    }
    Ok(out)
}

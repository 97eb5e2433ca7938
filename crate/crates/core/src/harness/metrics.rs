use serde::{Deserialize, Serialize};

use super::{Emotion, HarnessError};
use crate::models::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub seed: u64,
    pub model_kind: String,
    pub split: String,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
}

/// Classification quality on one evaluated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    /// Rows are truth, columns prediction.
    pub confusion: Vec<Vec<usize>>,
    /// Macro recall over classes present in the truth, percent.
    pub ua: f64,
    /// Accuracy, percent.
    pub wa: f64,
    /// Percent per class; `None` when the class never occurs in the truth.
    pub per_class_recall: Vec<Option<f64>>,
    pub num_utterances: usize,
    pub metadata: RunMetadata,
}

impl EvalReport {
    /// Copy with timestamps cleared, for reproducibility comparisons.
    pub fn without_timestamps(&self) -> Self {
        let mut r = self.clone();
        r.metadata.started_at = None;
        r.metadata.finished_at = None;
        r
    }
}

pub fn compute_metrics(truth: &[usize], predicted: &[usize]) -> Result<EvalReport, HarnessError> {
    if truth.len() != predicted.len() || truth.is_empty() {
        return Err(HarnessError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if let Some(&l) = truth.iter().chain(predicted).find(|&&l| l >= NUM_CLASSES) {
        return Err(HarnessError::LabelOutOfRange(l));
    }
    let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..NUM_CLASSES).map(|k| confusion[k][k]).sum();
    let per_class_recall: Vec<Option<f64>> = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| 100.0 * row[k] as f64 / n as f64)
        })
        .collect();
    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    Ok(EvalReport {
        class_names: Emotion::CLASSES
            .iter()
            .map(|e| e.name().to_string())
            .collect(),
        confusion,
        ua: present.iter().sum::<f64>() / present.len() as f64,
        wa: 100.0 * correct as f64 / truth.len() as f64,
        per_class_recall,
        num_utterances: truth.len(),
        metadata: RunMetadata::default(),
    })
}

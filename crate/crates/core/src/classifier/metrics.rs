//! Accuracy, support-weighted F1 and confusion matrices.

use serde::{Deserialize, Serialize};

use super::{DatasetIndex, MicroCnn, Split};
use crate::error::ClassifierError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
    #[serde(default)]
    pub labels: Vec<String>,
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Result<Self, ClassifierError> {
        let k = confusion.len();
        if confusion.iter().any(|r| r.len() != k) {
            return Err(ClassifierError::InvalidConfig("confusion matrix must be square".into()));
        }
        let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
        let total: u64 = support.iter().sum();
        if total == 0 {
            return Err(ClassifierError::EmptySplit("confusion".into()));
        }
        let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let per_class_f1: Vec<f64> = (0..k)
            .map(|c| {
                let tp = confusion[c][c] as f64;
                let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
                // 2TP / (2TP + FP + FN) equals 2PR / (P + R), and is 0 when undefined
                let denom = predicted as f64 + support[c] as f64;
                if denom == 0.0 {
                    0.0
                } else {
                    2.0 * tp / denom
                }
            })
            .collect();
        let weighted_f1 = per_class_f1
            .iter()
            .zip(&support)
            .map(|(f, &s)| f * s as f64)
            .sum::<f64>()
            / total as f64;
        Ok(Self {
            accuracy: correct as f64 / total as f64,
            weighted_f1,
            per_class_f1,
            confusion,
            support,
            labels: Vec::new(),
        })
    }
}

/// Slice-level metrics of `model` on one split.
pub fn evaluate(model: &MicroCnn, index: &DatasetIndex, split: Split) -> Result<Metrics, ClassifierError> {
    let idx = index.indices(split);
    if idx.is_empty() {
        return Err(ClassifierError::EmptySplit(split.to_string()));
    }
    let k = model.labels().len();
    let mut confusion = vec![vec![0u64; k]; k];
    for i in idx {
        let e = &index.entries()[i];
        let (_, p) = model.forward(&e.input)?;
        confusion[e.label][p.argmax()] += 1;
    }
    let mut m = Metrics::from_confusion(confusion)?;
    m.labels = model.labels().to_vec();
    Ok(m)
}

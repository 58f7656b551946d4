//! Piano classifier: micro-CNN, focal loss, training and evaluation.

pub mod checkpoint;
mod cnn;
mod dataset;
mod focal;
mod metrics;
mod train;

use std::sync::Arc;

pub use cnn::{softmax, Gradients, MicroCnn, ParamLayout, TensorSpec, CONV_CHANNELS};
pub use dataset::{DatasetIndex, Entry, Split};
pub use focal::{compute_alphas, focal_loss, ClassWeights, FocalLossConfig, PROB_FLOOR};
pub use metrics::{evaluate, Metrics};
pub use train::{train, EpochStats, History, TrainConfig};

use crate::audio::AudioClip;
use crate::error::{ClassifierError, Error};
use crate::NUM_CLASSES;

/// Class probabilities tagged with the label order they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: [f64; NUM_CLASSES],
    labels: Arc<[String]>,
}

impl ProbabilityVector {
    /// Validates non-negative entries summing to one within 1e-9.
    pub fn new(probs: [f64; NUM_CLASSES], labels: Arc<[String]>) -> Result<Self, ClassifierError> {
        if labels.len() != NUM_CLASSES {
            return Err(ClassifierError::InvalidConfig(format!(
                "{} labels for {NUM_CLASSES} probabilities",
                labels.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ClassifierError::InvalidConfig(format!(
                "probabilities must be finite and non-negative: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ClassifierError::InvalidConfig(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self { probs, labels })
    }

    pub(crate) fn from_raw(probs: [f64; NUM_CLASSES], labels: Arc<[String]>) -> Self {
        Self { probs, labels }
    }

    pub fn probs(&self) -> &[f64; NUM_CLASSES] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    /// Arithmetic mean of several vectors sharing one label order, renormalized.
    pub fn mean(items: &[ProbabilityVector]) -> Option<ProbabilityVector> {
        let first = items.first()?;
        let mut acc = [0.0; NUM_CLASSES];
        for item in items {
            for (a, p) in acc.iter_mut().zip(&item.probs) {
                *a += p;
            }
        }
        let n = items.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        let sum: f64 = acc.iter().sum();
        acc.iter_mut().for_each(|a| *a /= sum);
        Some(Self::from_raw(acc, first.labels.clone()))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Clip-level prediction: the slice-wise probabilities averaged.
///
/// The clip is resampled to the working rate and cut into 0.2 s slices;
/// clips shorter than one slice are rejected with `TooShort`.
pub fn predict_clip(model: &MicroCnn, clip: &AudioClip) -> Result<ProbabilityVector, Error> {
    Ok(predict_clip_detailed(model, clip)?.0)
}

/// Like [`predict_clip`] but also returns the number of slices used.
pub fn predict_clip_detailed(
    model: &MicroCnn,
    clip: &AudioClip,
) -> Result<(ProbabilityVector, usize), Error> {
    let inputs = crate::pipeline::clip_to_inputs(clip)?;
    if inputs.is_empty() {
        return Err(ClassifierError::TooShort.into());
    }
    let per_slice = inputs
        .iter()
        .map(|x| model.forward(x).map(|(_, p)| p))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = ProbabilityVector::mean(&per_slice).expect("non-empty");
    Ok((mean, per_slice.len()))
}

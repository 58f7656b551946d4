//! Mini-batch SGD with momentum; keeps the best-validation-accuracy weights.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::focal::{compute_alphas, focal_loss, FocalLossConfig};
use super::{argmax, DatasetIndex, MicroCnn, Split};
use crate::error::ClassifierError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            gamma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub alphas: Vec<f64>,
}

impl History {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains a fresh model seeded with `config.seed`.
///
/// Class weights are recomputed from the training-split counts. The returned
/// parameters are those of the epoch with the highest validation accuracy
/// (earliest on ties).
pub fn train(index: &DatasetIndex, config: &TrainConfig) -> Result<(MicroCnn, History), ClassifierError> {
    let train_idx = index.indices(Split::Train);
    let val_idx = index.indices(Split::Val);
    if train_idx.is_empty() {
        return Err(ClassifierError::EmptySplit("train".into()));
    }
    if val_idx.is_empty() {
        return Err(ClassifierError::EmptySplit("val".into()));
    }
    if config.batch_size == 0 || !(config.learning_rate >= 0.0) || !(0.0..1.0).contains(&config.momentum) {
        return Err(ClassifierError::InvalidConfig(format!("{config:?}")));
    }
    let shape = index.entries()[train_idx[0]].input.shape();
    let mut model = MicroCnn::with_input_shape(shape, config.seed)?;
    let weights = compute_alphas(&index.class_counts(Split::Train))?;
    let loss_cfg = FocalLossConfig::new(weights, config.gamma)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut order = train_idx.clone();
    let mut velocity = vec![0.0; model.param_count()];
    let mut grad = vec![0.0; model.param_count()];
    let mut history = History {
        alphas: loss_cfg.weights.alphas().to_vec(),
        ..History::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<_> = chunk
                .iter()
                .map(|&i| (&index.entries()[i].input, index.entries()[i].label))
                .collect();
            grad.fill(0.0);
            let loss = model.accumulate_gradients(&batch, &loss_cfg, &mut grad, |j, p| {
                if argmax(p) == batch[j].1 {
                    correct += 1;
                }
            })?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ClassifierError::NonFinite("training"));
            }
            loss_sum += loss * chunk.len() as f64;
            for ((p, v), g) in model.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v + g;
                *p -= config.learning_rate * *v;
            }
        }
        let (val_loss, val_accuracy) = loss_and_accuracy(&model, index, &val_idx, &loss_cfg)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_loss,
            val_accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, model.params().to_vec()));
            history.best_epoch = epoch;
        }
    }
    if let Some((_, params)) = best {
        model.params_mut().copy_from_slice(&params);
    }
    Ok((model, history))
}

fn loss_and_accuracy(
    model: &MicroCnn,
    index: &DatasetIndex,
    idx: &[usize],
    cfg: &FocalLossConfig,
) -> Result<(f64, f64), ClassifierError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let e = &index.entries()[i];
        let (_, p) = model.forward(&e.input)?;
        loss += focal_loss(p.probs(), e.label, cfg);
        if p.argmax() == e.label {
            correct += 1;
        }
    }
    let n = idx.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

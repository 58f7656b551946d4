//! Multi-class focal loss with inverse-frequency class weights.
//!
//! With one-hot targets the per-sample loss is
//! `-alpha_t * (1 - p_t)^gamma * ln(p_t)`; at `gamma = 0` it is weighted
//! cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::ClassifierError;

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-class weights in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    alphas: Vec<f64>,
}

impl ClassWeights {
    /// Validates `k >= 2`, every alpha in `[0, 1]` and a unit sum (1e-12).
    pub fn new(alphas: Vec<f64>) -> Result<Self, ClassifierError> {
        if alphas.len() < 2 {
            return Err(ClassifierError::TooFewClasses(alphas.len()));
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(ClassifierError::InvalidConfig(format!(
                "class weights must lie in [0, 1]: {alphas:?}"
            )));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ClassifierError::InvalidConfig(format!(
                "class weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { alphas })
    }

    pub fn uniform(k: usize) -> Result<Self, ClassifierError> {
        if k < 2 {
            return Err(ClassifierError::TooFewClasses(k));
        }
        Ok(Self {
            alphas: vec![1.0 / k as f64; k],
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Inverse-sample-size weights: `alpha_i = (1/s_i) / sum_j (1/s_j)`.
pub fn compute_alphas(counts: &[u64]) -> Result<ClassWeights, ClassifierError> {
    if counts.len() < 2 {
        return Err(ClassifierError::TooFewClasses(counts.len()));
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(ClassifierError::ZeroCount(i));
    }
    let inv: Vec<f64> = counts.iter().map(|&c| 1.0 / c as f64).collect();
    let total: f64 = inv.iter().sum();
    let mut alphas: Vec<f64> = inv.iter().map(|v| v / total).collect();
    // put any rounding residue on the largest weight so the sum is 1 to the ulp
    let residue = 1.0 - alphas.iter().sum::<f64>();
    if let Some(max) = alphas.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *max += residue;
    }
    ClassWeights::new(alphas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalLossConfig {
    pub weights: ClassWeights,
    pub gamma: f64,
}

impl FocalLossConfig {
    pub fn new(weights: ClassWeights, gamma: f64) -> Result<Self, ClassifierError> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ClassifierError::InvalidConfig(format!(
                "gamma must be a finite non-negative number, got {gamma}"
            )));
        }
        Ok(Self { weights, gamma })
    }
}

/// Focal loss of one sample given its class probabilities.
pub fn focal_loss(probs: &[f64], target: usize, config: &FocalLossConfig) -> f64 {
    let p = probs[target].max(PROB_FLOOR);
    let alpha = config.weights.alphas()[target];
    let modulation = if config.gamma == 0.0 {
        1.0
    } else {
        (1.0 - p).max(0.0).powf(config.gamma)
    };
    -alpha * modulation * p.ln()
}

/// Gradient of [`focal_loss`] with respect to the logits that produced
/// `probs` through a softmax, scaled by `scale`, accumulated into `out`.
pub(crate) fn focal_logit_grad(
    probs: &[f64],
    target: usize,
    config: &FocalLossConfig,
    scale: f64,
    out: &mut [f64],
) {
    let p = probs[target];
    if p < PROB_FLOOR {
        // flat region of the clamp
        return;
    }
    let alpha = config.weights.alphas()[target];
    let gamma = config.gamma;
    let q = 1.0 - p;
    // g = p * dL/dp
    let g = if gamma == 0.0 {
        -alpha
    } else {
        let focus = if q > 0.0 {
            gamma * q.powf(gamma - 1.0) * p * p.ln()
        } else {
            0.0
        };
        -alpha * (q.max(0.0).powf(gamma) - focus)
    };
    for (j, (o, pj)) in out.iter_mut().zip(probs).enumerate() {
        let delta = if j == target { 1.0 } else { 0.0 };
        *o += scale * g * (delta - pj);
    }
}

//! Quality profiles and the probability-weighted expected score.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::ProbabilityVector;
use crate::error::{Error, ScoringError};
use crate::{NUM_CLASSES, PIANO_LABELS};

/// Register names, in column order of `register_q`.
pub const REGISTERS: [&str; 3] = ["low", "middle", "high"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub labels: Vec<String>,
    pub overall_q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register_q: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// The source document with sorted keys and no whitespace.
    #[serde(skip)]
    canonical: String,
}

impl QualityProfile {
    /// Builds and validates a profile from its parts.
    pub fn new(
        labels: Vec<String>,
        overall_q: Vec<f64>,
        register_q: Option<Vec<[f64; 3]>>,
    ) -> Result<Self, ScoringError> {
        let mut p = Self {
            version: 1,
            id: None,
            labels,
            overall_q,
            register_q,
            provenance: None,
            notes: None,
            canonical: String::new(),
        };
        p.validate()?;
        p.canonical = canonicalize(&serde_json::to_value(&p).expect("profile serializes"));
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        let invalid = |e: serde_json::Error| ScoringError::InvalidProfile(e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
        let mut p: QualityProfile = serde_json::from_value(value.clone()).map_err(invalid)?;
        p.validate()?;
        p.canonical = canonicalize(&value);
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Input(format!("cannot read profile {}: {e}", path.display()))
        })?;
        Ok(Self::from_json(&text)?)
    }

    /// The seven labels in canonical order with seven equal values; handy for tests.
    pub fn constant(q: f64) -> Result<Self, ScoringError> {
        Self::new(
            PIANO_LABELS.iter().map(|s| s.to_string()).collect(),
            vec![q; NUM_CLASSES],
            None,
        )
    }

    fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: String| Err(ScoringError::InvalidProfile(m));
        if self.labels.len() != NUM_CLASSES || self.overall_q.len() != NUM_CLASSES {
            return bad(format!(
                "expected {NUM_CLASSES} labels and values, found {} and {}",
                self.labels.len(),
                self.overall_q.len()
            ));
        }
        let mut sorted: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        let mut known = PIANO_LABELS;
        known.sort_unstable();
        if sorted != known {
            return bad(format!("labels must be a permutation of {PIANO_LABELS:?}"));
        }
        let in_range = |q: &f64| (1.0..=5.0).contains(q);
        if !self.overall_q.iter().all(in_range) {
            return bad(format!("overall_q outside [1, 5]: {:?}", self.overall_q));
        }
        if let Some(r) = &self.register_q {
            if r.len() != NUM_CLASSES {
                return bad(format!("register_q has {} rows", r.len()));
            }
            if !r.iter().flatten().all(in_range) {
                return bad("register_q outside [1, 5]".into());
            }
        }
        Ok(())
    }

    /// `id` if set, otherwise a digest of the canonical document.
    pub fn profile_id(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => {
                let d = Sha256::digest(self.canonical.as_bytes());
                format!("sha256:{}", hex::encode(&d[..8]))
            }
        }
    }

    pub fn canonical_json(&self) -> &str {
        &self.canonical
    }

    pub fn min_q(&self) -> f64 {
        self.overall_q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_q(&self) -> f64 {
        self.overall_q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_order(&self, probs: &ProbabilityVector) -> Result<(), ScoringError> {
        if probs.labels() != self.labels.as_slice() {
            return Err(ScoringError::LabelOrderMismatch {
                probs: probs.labels().to_vec(),
                profile: self.labels.clone(),
            });
        }
        Ok(())
    }
}

fn canonicalize(value: &serde_json::Value) -> String {
    // serde_json's default map is ordered by key
    serde_json::to_string(value).expect("value serializes")
}

/// `sum_i P_i * Q_i` over the seven pianos.
pub fn expected_score(probs: &ProbabilityVector, profile: &QualityProfile) -> Result<f64, ScoringError> {
    profile.check_order(probs)?;
    let e: f64 = probs
        .probs()
        .iter()
        .zip(&profile.overall_q)
        .map(|(p, q)| p * q)
        .sum();
    // a convex combination cannot leave the hull; clamp rounding drift
    Ok(e.clamp(profile.min_q(), profile.max_q()))
}

/// Per-register expected scores, when the profile has register values.
pub fn register_scores(
    probs: &ProbabilityVector,
    profile: &QualityProfile,
) -> Result<Option<RegisterScores>, ScoringError> {
    profile.check_order(probs)?;
    Ok(profile.register_q.as_ref().map(|rows| {
        let mut acc = [0.0; 3];
        for (p, row) in probs.probs().iter().zip(rows) {
            for (a, q) in acc.iter_mut().zip(row) {
                *a += p * q;
            }
        }
        RegisterScores {
            low: acc[0],
            middle: acc[1],
            high: acc[2],
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegisterScores {
    pub low: f64,
    pub middle: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub probabilities: ProbabilityVector,
    pub expected_score: f64,
    pub per_slice_count: usize,
    pub profile_id: String,
    pub register_scores: Option<RegisterScores>,
}

impl ScoreReport {
    pub fn new(
        probabilities: ProbabilityVector,
        profile: &QualityProfile,
        per_slice_count: usize,
    ) -> Result<Self, ScoringError> {
        Ok(Self {
            expected_score: expected_score(&probabilities, profile)?,
            register_scores: register_scores(&probabilities, profile)?,
            probabilities,
            per_slice_count,
            profile_id: profile.profile_id(),
        })
    }

    pub fn into_response(self, model_id: impl Into<String>) -> ScoreResponse {
        ScoreResponse {
            probabilities: self
                .probabilities
                .labels()
                .iter()
                .zip(self.probabilities.probs())
                .map(|(label, &probability)| LabeledProbability {
                    label: label.clone(),
                    probability,
                })
                .collect(),
            expected_score: self.expected_score,
            slices_used: self.per_slice_count,
            model_id: model_id.into(),
            profile_id: self.profile_id,
            register_scores: self.register_scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledProbability {
    pub label: String,
    pub probability: f64,
}

/// Wire format of a score, shared by the CLI and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub probabilities: Vec<LabeledProbability>,
    pub expected_score: f64,
    pub slices_used: usize,
    pub model_id: String,
    pub profile_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register_scores: Option<RegisterScores>,
}

//! End-to-end glue: clip → slices → model inputs → probabilities → score.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::audio::{self, AudioClip};
use crate::classifier::{self, checkpoint, Entry, MicroCnn};
use crate::error::{ClassifierError, Error};
use crate::scoring::{QualityProfile, ScoreReport, ScoreResponse};
use crate::spectral::{to_model_input, MelAnalyzer, ModelInput};
use crate::{PIANO_LABELS, WORKING_RATE_HZ};

fn analyzer() -> &'static MelAnalyzer {
    static MEL: OnceLock<MelAnalyzer> = OnceLock::new();
    MEL.get_or_init(|| MelAnalyzer::new(WORKING_RATE_HZ).expect("working rate is valid"))
}

/// Resamples to the working rate, slices at 0.2 s and converts each slice
/// to a `128 x 35` model input. Clips shorter than one slice give no inputs.
pub fn clip_to_inputs(clip: &AudioClip) -> Result<Vec<ModelInput>, Error> {
    let clip = audio::resample(clip, WORKING_RATE_HZ)?;
    audio::slice_default(&clip)
        .slices
        .iter()
        .map(|s| Ok(to_model_input(&analyzer().analyze(s)?)?))
        .collect()
}

/// Classifies and scores one clip; this is what both `pianoq score` and
/// `POST /api/score` run.
pub fn score_clip(model: &MicroCnn, profile: &QualityProfile, clip: &AudioClip) -> Result<ScoreResponse, Error> {
    score_clip_with_id(model, &checkpoint::model_id(model), profile, clip)
}

/// [`score_clip`] with a precomputed model id.
pub fn score_clip_with_id(
    model: &MicroCnn,
    model_id: &str,
    profile: &QualityProfile,
    clip: &AudioClip,
) -> Result<ScoreResponse, Error> {
    let (probs, slices) = classifier::predict_clip_detailed(model, clip)?;
    Ok(ScoreReport::new(probs, profile, slices)?.into_response(model_id))
}

/// Compact JSON used on every output surface.
pub fn to_json(response: &ScoreResponse) -> String {
    serde_json::to_string(response).expect("score response serializes")
}

/// One row of a `path,label,source_id` manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: String,
    pub source_id: String,
}

/// Reads a manifest; relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, Error> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<ManifestRow>() {
        let mut row = rec?;
        if row.path.is_relative() {
            row.path = base.join(&row.path);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_manifest(path: impl AsRef<Path>, rows: &[ManifestRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Accepts a piano name or a class index.
pub fn parse_label(label: &str) -> Result<usize, Error> {
    if let Some(i) = PIANO_LABELS.iter().position(|l| *l == label) {
        return Ok(i);
    }
    match label.parse::<usize>() {
        Ok(i) if i < PIANO_LABELS.len() => Ok(i),
        _ => Err(Error::Input(format!("unknown piano label `{label}`"))),
    }
}

/// Loads every manifest recording and expands it into labelled slice inputs.
pub fn manifest_entries(rows: &[ManifestRow]) -> Result<Vec<Entry>, Error> {
    let mut entries = Vec::new();
    for row in rows {
        let label = parse_label(&row.label)?;
        let clip = audio::load_wav(&row.path)?;
        let inputs = clip_to_inputs(&clip)?;
        if inputs.is_empty() {
            return Err(ClassifierError::TooShort.into());
        }
        entries.extend(inputs.into_iter().map(|input| Entry {
            input,
            label,
            source_id: row.source_id.clone(),
        }));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ProbabilityVector;

    fn tone(seconds: f64, rate: u32) -> AudioClip {
        let n = (seconds * rate as f64).round() as usize;
        let s = (0..n)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin())
            .collect();
        AudioClip::new(s, rate, "tone").unwrap()
    }

    #[test]
    fn inputs_per_slice() {
        let x = clip_to_inputs(&tone(1.0, 44_100)).unwrap();
        assert_eq!(x.len(), 5);
        assert!(x.iter().all(|m| m.shape() == (128, 35)));
        assert_eq!(clip_to_inputs(&tone(1.0, 22_050)).unwrap().len(), 5);
        assert!(clip_to_inputs(&tone(0.1, 44_100)).unwrap().is_empty());
    }

    #[test]
    fn single_slice_prediction_equals_forward() {
        let model = MicroCnn::new(5);
        let clip = tone(0.2, 44_100);
        let p = classifier::predict_clip(&model, &clip).unwrap();
        let (_, direct) = model.forward(&clip_to_inputs(&clip).unwrap()[0]).unwrap();
        for (a, b) in p.probs().iter().zip(direct.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_slices_average() {
        let model = MicroCnn::new(6);
        let mut samples = tone(0.2, 44_100).into_samples();
        samples.extend(samples.iter().map(|v| v * 0.1).collect::<Vec<_>>());
        samples.iter_mut().skip(8820).enumerate().for_each(|(i, v)| *v += 0.2 * ((i as f64) * 0.9).sin() * 0.5);
        let samples: Vec<f64> = samples.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let clip = AudioClip::new(samples, 44_100, "two").unwrap();
        let inputs = clip_to_inputs(&clip).unwrap();
        assert_eq!(inputs.len(), 2);
        let p: Vec<ProbabilityVector> = inputs.iter().map(|x| model.forward(x).unwrap().1).collect();
        let mean = classifier::predict_clip(&model, &clip).unwrap();
        for i in 0..7 {
            assert!((mean.probs()[i] - (p[0].probs()[i] + p[1].probs()[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short_clip_is_rejected() {
        let model = MicroCnn::new(0);
        let profile = QualityProfile::constant(3.0).unwrap();
        let err = score_clip(&model, &profile, &tone(0.1, 44_100)).unwrap_err();
        assert!(matches!(err, Error::Classifier(ClassifierError::TooShort)));
    }

    #[test]
    fn labels_parse_by_name_or_index() {
        assert_eq!(parse_label("Steinway").unwrap(), 5);
        assert_eq!(parse_label("2").unwrap(), 2);
        assert!(parse_label("Bosendorfer").is_err());
        assert!(parse_label("7").is_err());
    }
}

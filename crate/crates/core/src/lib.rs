//! # pianoq
//!
//! Piano sound-quality evaluation. A recording of a struck piano note is
//! sliced into 0.2 s windows, each window is turned into a normalized mel
//! spectrogram, a small CNN assigns probabilities to seven reference pianos,
//! and those probabilities are contracted with a survey-derived quality
//! profile into a single 1–5 score.
//!
//! Alongside the classifier the crate carries the psychoacoustic tooling used
//! to interpret it: ERB bandwidth formulas, a 77-channel ERB filterbank,
//! per-brand summaries, and PCA / exact t-SNE embeddings of ERB vectors. The
//! listening-survey statistics (per-register means, Pearson correlations)
//! that produce the quality profile are in [`survey`].
//!
//! ## Pipeline
//!
//! ```text
//! WAV -> AudioClip -> resample(44.1 kHz) -> slice(0.2 s) -> mel(128 x 35)
//!     -> MicroCnn -> P1..P7 -> sum(Pi * Qi) -> score
//! ```
//!
//! ## Quick start
//!
//! ```no_run
//! use pianoq::{audio, pipeline, classifier::checkpoint, scoring::QualityProfile};
//!
//! let model = checkpoint::load("model.pqm")?;
//! let profile = QualityProfile::load("profile.json")?;
//! let clip = audio::load_wav("note.wav")?;
//! let response = pipeline::score_clip(&model, &profile, &clip)?;
//! println!("{:.2}", response.expected_score);
//! # Ok::<(), pianoq::Error>(())
//! ```
//!
//! Runnable programs for each stage live in `examples/`; the `pianoq` binary
//! exposes the same stages as subcommands and hosts the scoring service.

pub mod audio;
pub mod classifier;
pub mod cli;
pub mod embedding;
pub mod erb;
pub mod error;
pub mod matrix;
pub mod pipeline;
pub mod scoring;
pub mod service;
pub mod spectral;
pub mod survey;
pub mod synth;

pub use audio::{AudioClip, SliceSet};
pub use classifier::{MicroCnn, ProbabilityVector};
pub use error::Error;
pub use matrix::Matrix;
pub use scoring::QualityProfile;

/// The seven reference pianos, in the canonical class order used by models,
/// profiles and the HTTP API.
pub const PIANO_LABELS: [&str; 7] = [
    "PearlRiver",
    "YoungChang",
    "Steinway-T",
    "Hsinghai",
    "Kawai",
    "Steinway",
    "Kawai-G",
];

/// Number of piano classes.
pub const NUM_CLASSES: usize = PIANO_LABELS.len();

/// Every clip is resampled to this rate on ingest.
pub const WORKING_RATE_HZ: u32 = 44_100;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("window overflow: {samples} samples is shorter than fft size {fft_size}")]
    WindowOverflow { samples: usize, fft_size: usize },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("band mismatch: expected {expected} mel bands, found {found}")]
    BandMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum ErbError {
    #[error("negative frequency {0} is outside the ERB domain")]
    DomainError(f64),
    #[error("sample rate {0} Hz is below 32 kHz; the 16 kHz channel would exceed Nyquist")]
    InvalidRate(u32),
    #[error("no pitches to summarize")]
    EmptyInput,
    #[error("empty clip")]
    EmptyClip,
    #[error("clip of {0} samples is shorter than one 256-sample frame")]
    TooShort(usize),
    #[error("clip rate {clip} Hz does not match filterbank rate {bank} Hz")]
    RateMismatch { clip: u32, bank: u32 },
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("input contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("at least two classes are required, got {0}")]
    TooFewClasses(usize),
    #[error("class {0} has a zero sample count")]
    ZeroCount(usize),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("split `{0}` is empty")]
    EmptySplit(String),
    #[error("clip is shorter than one 0.2 s slice")]
    TooShort,
    #[error("label index {0} out of range")]
    BadLabel(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("non-finite value during {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("probability labels {probs:?} do not match profile labels {profile:?}")]
    LabelOrderMismatch {
        probs: Vec<String>,
        profile: Vec<String>,
    },
    #[error("invalid quality profile: {0}")]
    InvalidProfile(String),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
}

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("survey has no participants")]
    EmptySurvey,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("at least two observations are required")]
    TooShort,
    #[error("zero variance: correlation is undefined for a constant sequence")]
    ZeroVariance,
    #[error("rating {value} for participant {participant}, piano {piano} is outside 1..=5")]
    InvalidRating {
        participant: String,
        piano: String,
        value: i64,
    },
    #[error("malformed survey: {0}")]
    Malformed(String),
}

/// Crate-wide error used by the pipeline, CLI and service layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Erb(#[from] ErbError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Input(String),
}

impl Error {
    /// Process exit code: 2 for bad input or file format, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Classifier(ClassifierError::NonFinite(_))
            | Error::Embedding(EmbeddingError::NonFinite) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

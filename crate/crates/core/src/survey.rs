//! Listening-survey statistics: per-piano register means and Pearson
//! correlations between registers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ScoringError, SurveyError};
use crate::matrix::Matrix;
use crate::scoring::QualityProfile;
use crate::PIANO_LABELS;

/// Rating columns, in order.
pub const RATING_COLUMNS: [&str; 4] = ["low", "middle", "high", "overall"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub participant: String,
    pub piano: String,
    pub low: u8,
    pub middle: u8,
    pub high: u8,
    pub overall: u8,
}

impl SurveyRow {
    pub fn ratings(&self) -> [u8; 4] {
        [self.low, self.middle, self.high, self.overall]
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    participant: String,
    piano: String,
    low: i64,
    middle: i64,
    high: i64,
    overall: i64,
}

/// One row per participant and piano, every rating in 1..=5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyTable {
    rows: Vec<SurveyRow>,
    participants: BTreeSet<String>,
    pianos: Vec<String>,
}

impl SurveyTable {
    pub fn new(rows: Vec<SurveyRow>) -> Result<Self, SurveyError> {
        let mut seen = BTreeSet::new();
        let mut pianos: Vec<String> = Vec::new();
        for r in &rows {
            for v in r.ratings() {
                if !(1..=5).contains(&v) {
                    return Err(SurveyError::InvalidRating {
                        participant: r.participant.clone(),
                        piano: r.piano.clone(),
                        value: v as i64,
                    });
                }
            }
            if !seen.insert((r.participant.clone(), r.piano.clone())) {
                return Err(SurveyError::Malformed(format!(
                    "participant `{}` rated `{}` twice",
                    r.participant, r.piano
                )));
            }
            if !pianos.contains(&r.piano) {
                pianos.push(r.piano.clone());
            }
        }
        if rows.is_empty() {
            return Err(SurveyError::EmptySurvey);
        }
        // reference pianos first, in canonical order; others as they appear
        pianos.sort_by_key(|p| PIANO_LABELS.iter().position(|l| l == p).unwrap_or(usize::MAX));
        let participants = rows.iter().map(|r| r.participant.clone()).collect();
        Ok(Self {
            rows,
            participants,
            pianos,
        })
    }

    /// Parses CSV with header `participant,piano,low,middle,high,overall`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, SurveyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| SurveyError::Malformed(e.to_string()))?
            .clone();
        let expected = ["participant", "piano", "low", "middle", "high", "overall"];
        if header.iter().ne(expected) {
            return Err(SurveyError::Malformed(format!(
                "expected header {}, found {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<RawRow>() {
            let r = rec.map_err(|e| SurveyError::Malformed(e.to_string()))?;
            let check = |v: i64| {
                u8::try_from(v).ok().filter(|v| (1..=5).contains(v)).ok_or_else(|| {
                    SurveyError::InvalidRating {
                        participant: r.participant.clone(),
                        piano: r.piano.clone(),
                        value: v,
                    }
                })
            };
            rows.push(SurveyRow {
                low: check(r.low)?,
                middle: check(r.middle)?,
                high: check(r.high)?,
                overall: check(r.overall)?,
                participant: r.participant,
                piano: r.piano,
            });
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot read survey {}: {e}", path.display())))?;
        Ok(Self::from_csv(file)?)
    }

    pub fn rows(&self) -> &[SurveyRow] {
        &self.rows
    }

    pub fn participant_count(&self) -> usize {
        self.participants.len()
    }

    pub fn piano_labels(&self) -> &[String] {
        &self.pianos
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PianoMeans {
    pub piano: String,
    pub raters: usize,
    pub low: f64,
    pub middle: f64,
    pub high: f64,
    pub overall: f64,
}

impl PianoMeans {
    pub fn values(&self) -> [f64; 4] {
        [self.low, self.middle, self.high, self.overall]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub participant_count: usize,
    pub means: Vec<PianoMeans>,
}

impl SurveySummary {
    /// A quality profile from the means; requires exactly the seven reference pianos.
    pub fn to_profile(&self) -> Result<QualityProfile, ScoringError> {
        QualityProfile::new(
            self.means.iter().map(|m| m.piano.clone()).collect(),
            self.means.iter().map(|m| m.overall).collect(),
            Some(self.means.iter().map(|m| [m.low, m.middle, m.high]).collect()),
        )
    }
}

/// Arithmetic mean over participants for every piano and rating column.
pub fn aggregate_survey(table: &SurveyTable) -> Result<SurveySummary, SurveyError> {
    if table.rows.is_empty() {
        return Err(SurveyError::EmptySurvey);
    }
    let mut sums: BTreeMap<&str, ([u64; 4], usize)> = BTreeMap::new();
    for r in &table.rows {
        let e = sums.entry(&r.piano).or_default();
        for (s, v) in e.0.iter_mut().zip(r.ratings()) {
            *s += v as u64;
        }
        e.1 += 1;
    }
    let means = table
        .pianos
        .iter()
        .map(|p| {
            let (s, n) = sums[p.as_str()];
            // integer sums, one rounding in the division
            let m = s.map(|v| v as f64 / n as f64);
            PianoMeans {
                piano: p.clone(),
                raters: n,
                low: m[0],
                middle: m[1],
                high: m[2],
                overall: m[3],
            }
        })
        .collect();
    Ok(SurveySummary {
        participant_count: table.participant_count(),
        means,
    })
}

/// `sum (x - mx)(y - my) / sqrt(sum (x - mx)^2 * sum (y - my)^2)`.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64, SurveyError> {
    if x.len() != y.len() {
        return Err(SurveyError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(SurveyError::TooShort);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SurveyError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 4x4 correlations between low, middle, high and overall, computed over the
/// per-piano means.
pub fn correlation_matrix(table: &SurveyTable) -> Result<Matrix, SurveyError> {
    let summary = aggregate_survey(table)?;
    let columns: Vec<Vec<f64>> = (0..4)
        .map(|c| summary.means.iter().map(|m| m.values()[c]).collect())
        .collect();
    let mut out = Matrix::zeros(4, 4);
    for i in 0..4 {
        for j in i..4 {
            let r = pearson_corr(&columns[i], &columns[j])?;
            out.set(i, j, r);
            out.set(j, i, r);
        }
    }
    Ok(out)
}

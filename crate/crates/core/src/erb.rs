//! Equivalent-rectangular-bandwidth analysis.
//!
//! Two published ERB approximations are provided ([`erb_moore83`],
//! [`erb_glasberg90`]), together with the ERB-rate (Cam) scale used to place
//! 77 channel centers between 26 Hz and 16 kHz. A clip's ERB representation
//! is the power of each 256-sample Hann frame integrated over each channel's
//! ideal rectangular band `[center - ERB/2, center + ERB/2]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::ErbError;
use crate::matrix::Matrix;

pub const ERB_CHANNELS: usize = 77;
pub const ERB_FRAME_SAMPLES: usize = 256;
pub const LOWEST_CENTER_HZ: f64 = 26.0;
pub const HIGHEST_CENTER_HZ: f64 = 16_000.0;

/// Quadratic ERB approximation, `f` in kHz, result in Hz.
pub fn erb_moore83(f_khz: f64) -> Result<f64, ErbError> {
    if f_khz < 0.0 || f_khz.is_nan() {
        return Err(ErbError::DomainError(f_khz));
    }
    Ok(6.23 * f_khz * f_khz + 93.39 * f_khz + 28.52)
}

/// Linear ERB approximation, `f` in kHz, result in Hz.
pub fn erb_glasberg90(f_khz: f64) -> Result<f64, ErbError> {
    if f_khz < 0.0 || f_khz.is_nan() {
        return Err(ErbError::DomainError(f_khz));
    }
    Ok(24.7 * (4.37 * f_khz + 1.0))
}

/// ERB-rate in Cams: `21.4 * log10(4.37 f / 1000 + 1)`.
pub fn erb_rate(f_hz: f64) -> Result<f64, ErbError> {
    if f_hz < 0.0 || f_hz.is_nan() {
        return Err(ErbError::DomainError(f_hz));
    }
    Ok(21.4 * (4.37 * f_hz / 1000.0 + 1.0).log10())
}

pub fn inverse_erb_rate(rate: f64) -> Result<f64, ErbError> {
    if rate < 0.0 || rate.is_nan() {
        return Err(ErbError::DomainError(rate));
    }
    Ok((10f64.powf(rate / 21.4) - 1.0) * 1000.0 / 4.37)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErbFilterbank {
    pub center_freqs_hz: Vec<f64>,
    pub bandwidths_hz: Vec<f64>,
    pub frame_samples: usize,
    pub sample_rate_hz: u32,
    /// Per channel, the FFT bins overlapping its band and the fraction of
    /// each bin's span inside the band.
    #[serde(skip)]
    bin_weights: Vec<Vec<(usize, f64)>>,
}

/// 77 channels uniformly spaced in ERB-rate from 26 Hz to 16 kHz, each with
/// the linear-approximation bandwidth at its center.
pub fn build_filterbank(sample_rate_hz: u32) -> Result<ErbFilterbank, ErbError> {
    if sample_rate_hz < 32_000 {
        return Err(ErbError::InvalidRate(sample_rate_hz));
    }
    let lo = erb_rate(LOWEST_CENTER_HZ)?;
    let hi = erb_rate(HIGHEST_CENTER_HZ)?;
    let step = (hi - lo) / (ERB_CHANNELS - 1) as f64;
    let mut centers = Vec::with_capacity(ERB_CHANNELS);
    for i in 0..ERB_CHANNELS {
        centers.push(inverse_erb_rate(lo + step * i as f64)?);
    }
    // pin the endpoint exactly
    centers[ERB_CHANNELS - 1] = HIGHEST_CENTER_HZ;
    let bandwidths = centers
        .iter()
        .map(|c| erb_glasberg90(c / 1000.0))
        .collect::<Result<Vec<_>, _>>()?;

    let bins = ERB_FRAME_SAMPLES / 2 + 1;
    let df = sample_rate_hz as f64 / ERB_FRAME_SAMPLES as f64;
    let bin_weights = centers
        .iter()
        .zip(&bandwidths)
        .map(|(&c, &b)| {
            let (lo, hi) = (c - b / 2.0, c + b / 2.0);
            (0..bins)
                .filter_map(|k| {
                    let a = k as f64 * df - df / 2.0;
                    let overlap = (a + df).min(hi) - a.max(lo);
                    (overlap > 0.0).then_some((k, overlap / df))
                })
                .collect()
        })
        .collect();
    Ok(ErbFilterbank {
        center_freqs_hz: centers,
        bandwidths_hz: bandwidths,
        frame_samples: ERB_FRAME_SAMPLES,
        sample_rate_hz,
        bin_weights,
    })
}

impl ErbFilterbank {
    pub fn channels(&self) -> usize {
        self.center_freqs_hz.len()
    }
}

/// How much of a recording is analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DurationMode {
    #[serde(rename = "1.0")]
    OneSecond,
    #[serde(rename = "1.2")]
    OnePointTwoSeconds,
    #[serde(rename = "full")]
    Full,
}

impl DurationMode {
    /// Target length in samples (`None` keeps the clip as is).
    pub fn target_samples(self, sample_rate_hz: u32) -> Option<usize> {
        let secs = match self {
            DurationMode::OneSecond => 1.0,
            DurationMode::OnePointTwoSeconds => 1.2,
            DurationMode::Full => return None,
        };
        Some((secs * sample_rate_hz as f64).round() as usize)
    }
}

impl fmt::Display for DurationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DurationMode::OneSecond => "1.0",
            DurationMode::OnePointTwoSeconds => "1.2",
            DurationMode::Full => "full",
        })
    }
}

impl FromStr for DurationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "1.0" => Ok(DurationMode::OneSecond),
            "1.2" => Ok(DurationMode::OnePointTwoSeconds),
            "full" => Ok(DurationMode::Full),
            other => Err(format!("unknown duration `{other}` (expected 1.0, 1.2 or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErbRepresentation {
    /// `frames x 77` band power.
    pub band_power: Matrix,
    pub time_mean: Vec<f64>,
    pub duration_mode: DurationMode,
}

/// Computes the ERB representation of `clip`.
///
/// The clip is truncated or zero-padded to the duration mode, cut into
/// non-overlapping 256-sample frames (`floor(len / 256)` of them), and each
/// Hann-windowed frame's power spectrum is integrated over every channel's
/// rectangular band.
pub fn erb_representation(
    clip: &AudioClip,
    bank: &ErbFilterbank,
    duration_mode: DurationMode,
) -> Result<ErbRepresentation, ErbError> {
    if clip.is_empty() {
        return Err(ErbError::EmptyClip);
    }
    if clip.sample_rate_hz() != bank.sample_rate_hz {
        return Err(ErbError::RateMismatch {
            clip: clip.sample_rate_hz(),
            bank: bank.sample_rate_hz,
        });
    }
    let n = bank.frame_samples;
    let mut samples = clip.samples().to_vec();
    if let Some(target) = duration_mode.target_samples(clip.sample_rate_hz()) {
        samples.resize(target, 0.0);
    }
    let frames = samples.len() / n;
    if frames == 0 {
        return Err(ErbError::TooShort(samples.len()));
    }
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut power = vec![0.0; n / 2 + 1];
    let channels = bank.channels();
    let mut band_power = Matrix::zeros(frames, channels);
    for t in 0..frames {
        let frame = &samples[t * n..(t + 1) * n];
        for ((slot, x), w) in buf.iter_mut().zip(frame).zip(&window) {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        let row = band_power.row_mut(t);
        for (cell, weights) in row.iter_mut().zip(&bank.bin_weights) {
            *cell = weights.iter().map(|&(k, w)| power[k] * w).sum();
        }
    }
    let time_mean = band_power.column_means();
    Ok(ErbRepresentation {
        band_power,
        time_mean,
        duration_mode,
    })
}

/// Per-pitch mean ERB vectors of one piano and their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrandErbSummary {
    pub brand_label: String,
    pub mean_erb_by_pitch: BTreeMap<u32, Vec<f64>>,
    pub brand_average: Vec<f64>,
}

impl BrandErbSummary {
    /// `(pitch, mean over channels)` for each pitch present, in pitch order.
    pub fn pitch_curve(&self) -> Vec<(u32, f64)> {
        self.mean_erb_by_pitch
            .iter()
            .map(|(&p, v)| (p, v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    }
}

/// Averages the time-mean vectors of every pitch present. Gaps in the pitch
/// map (e.g. a piano recorded without black keys) are fine.
pub fn summarize_brand(
    reps: &BTreeMap<u32, ErbRepresentation>,
    brand_label: &str,
) -> Result<BrandErbSummary, ErbError> {
    let first = reps.values().next().ok_or(ErbError::EmptyInput)?;
    let mut average = vec![0.0; first.time_mean.len()];
    let mut by_pitch = BTreeMap::new();
    for (&pitch, rep) in reps {
        for (a, v) in average.iter_mut().zip(&rep.time_mean) {
            *a += v;
        }
        by_pitch.insert(pitch, rep.time_mean.clone());
    }
    let n = reps.len() as f64;
    average.iter_mut().for_each(|a| *a /= n);
    Ok(BrandErbSummary {
        brand_label: brand_label.to_string(),
        mean_erb_by_pitch: by_pitch,
        brand_average: average,
    })
}

/// Register of a piano key numbered 1..=88: low below 30, high from 60.
pub fn register_of_pitch(pitch: u32) -> &'static str {
    match pitch {
        0..=29 => "low",
        30..=59 => "middle",
        _ => "high",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn formula_values() {
        assert_eq!(erb_moore83(0.0).unwrap(), 28.52);
        assert!((erb_moore83(1.0).unwrap() - 128.14).abs() < 1e-12);
        assert_eq!(erb_glasberg90(0.0).unwrap(), 24.7);
        assert!(rel(erb_glasberg90(1.0).unwrap(), 132.639) < 1e-12);
        assert!(rel(erb_glasberg90(16.0).unwrap(), 1751.724) < 1e-12);
        assert!(matches!(erb_moore83(-0.1), Err(ErbError::DomainError(_))));
        assert!(matches!(erb_glasberg90(-1.0), Err(ErbError::DomainError(_))));
        let mut prev = 0.0;
        for i in 0..200 {
            let v = erb_moore83(i as f64 * 0.1).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn approximations_agree_in_the_overlap() {
        for f in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let (a, b) = (erb_moore83(f).unwrap(), erb_glasberg90(f).unwrap());
            assert!(rel(a, b) < 0.15, "{f} kHz: {a} vs {b}");
        }
    }

    #[test]
    fn erb_rate_roundtrip() {
        assert_eq!(erb_rate(0.0).unwrap(), 0.0);
        assert!((erb_rate(1000.0).unwrap() - 15.621).abs() < 1e-3);
        for f in [100.0, 1000.0, 8000.0] {
            let back = inverse_erb_rate(erb_rate(f).unwrap()).unwrap();
            assert!(rel(back, f) < 1e-9);
        }
        assert!(erb_rate(-5.0).is_err());
        assert!(inverse_erb_rate(-0.1).is_err());
    }

    #[test]
    fn filterbank_layout() {
        let bank = build_filterbank(44_100).unwrap();
        assert_eq!(bank.channels(), 77);
        assert!(rel(*bank.center_freqs_hz.last().unwrap(), 16_000.0) < 1e-6);
        assert!((bank.center_freqs_hz[0] - 26.0).abs() < 1e-9);
        let gaps: Vec<f64> = bank.center_freqs_hz.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&g| g > 0.0));
        assert!(gaps.windows(2).all(|g| g[1] > g[0]));
        for (c, b) in bank.center_freqs_hz.iter().zip(&bank.bandwidths_hz) {
            assert_eq!(*b, erb_glasberg90(c / 1000.0).unwrap());
        }
        assert!(matches!(build_filterbank(22_050), Err(ErbError::InvalidRate(22_050))));
    }

    #[test]
    fn frame_counts_follow_duration_mode() {
        let bank = build_filterbank(44_100).unwrap();
        let clip = AudioClip::new(vec![0.01; 90_000], 44_100, "x").unwrap();
        let cases = [
            (DurationMode::OneSecond, 44_100 / 256),
            (DurationMode::OnePointTwoSeconds, 52_920 / 256),
            (DurationMode::Full, 90_000 / 256),
        ];
        for (mode, frames) in cases {
            let rep = erb_representation(&clip, &bank, mode).unwrap();
            assert_eq!(rep.band_power.rows(), frames, "{mode}");
        }
    }

    #[test]
    fn silence_and_short_clips() {
        let bank = build_filterbank(44_100).unwrap();
        let zero = AudioClip::new(vec![0.0; 10_000], 44_100, "z").unwrap();
        let rep = erb_representation(&zero, &bank, DurationMode::OnePointTwoSeconds).unwrap();
        assert!(rep.band_power.as_slice().iter().all(|&v| v == 0.0));
        let tiny = AudioClip::new(vec![0.1; 100], 44_100, "t").unwrap();
        assert!(matches!(
            erb_representation(&tiny, &bank, DurationMode::Full),
            Err(ErbError::TooShort(100))
        ));
        let other_rate = AudioClip::new(vec![0.1; 1000], 48_000, "t").unwrap();
        assert!(erb_representation(&other_rate, &bank, DurationMode::Full).is_err());
    }

    #[test]
    fn power_scales_quadratically() {
        let bank = build_filterbank(44_100).unwrap();
        let s: Vec<f64> = (0..20_000).map(|i| 0.3 * ((i as f64) * 0.37).sin()).collect();
        let clip = AudioClip::new(s, 44_100, "s").unwrap();
        let base = erb_representation(&clip, &bank, DurationMode::Full).unwrap();
        let scaled = erb_representation(&clip.scaled(2.5), &bank, DurationMode::Full).unwrap();
        for (a, b) in scaled.band_power.as_slice().iter().zip(base.band_power.as_slice()) {
            assert!((a - 6.25 * b).abs() <= 1e-9 * (6.25 * b).abs().max(1e-300));
        }
    }

    #[test]
    fn time_mean_is_column_mean() {
        let bank = build_filterbank(44_100).unwrap();
        let s: Vec<f64> = (0..30_000).map(|i| 0.2 * ((i as f64) * 0.05).sin()).collect();
        let rep = erb_representation(
            &AudioClip::new(s, 44_100, "s").unwrap(),
            &bank,
            DurationMode::Full,
        )
        .unwrap();
        for c in 0..77 {
            let m: f64 = (0..rep.band_power.rows())
                .map(|t| rep.band_power.get(t, c))
                .sum::<f64>()
                / rep.band_power.rows() as f64;
            assert!((m - rep.time_mean[c]).abs() <= 1e-12 * m.abs().max(1e-300));
        }
    }

    #[test]
    fn sine_at_a_channel_center_wins_that_channel() {
        let bank = build_filterbank(44_100).unwrap();
        for j in [60, 66, 70, 74] {
            let f = bank.center_freqs_hz[j];
            let s: Vec<f64> = (0..44_100)
                .map(|i| 0.5 * (2.0 * PI * f * i as f64 / 44_100.0).sin())
                .collect();
            let rep = erb_representation(
                &AudioClip::new(s, 44_100, "s").unwrap(),
                &bank,
                DurationMode::OneSecond,
            )
            .unwrap();
            let argmax = (0..77)
                .max_by(|&a, &b| rep.time_mean[a].total_cmp(&rep.time_mean[b]))
                .unwrap();
            assert_eq!(argmax, j);
        }
    }

    #[test]
    fn brand_summary_means() {
        let rep = |v: Vec<f64>| ErbRepresentation {
            band_power: Matrix::from_vec(1, v.len(), v.clone()),
            time_mean: v,
            duration_mode: DurationMode::Full,
        };
        let mut one = BTreeMap::new();
        one.insert(40, rep(vec![1.0, 2.0, 3.0]));
        let s = summarize_brand(&one, "Kawai").unwrap();
        assert_eq!(s.brand_average, vec![1.0, 2.0, 3.0]);

        let mut two = one.clone();
        two.insert(52, rep(vec![3.0, 0.0, 5.0]));
        let s = summarize_brand(&two, "Kawai").unwrap();
        assert_eq!(s.brand_average, vec![2.0, 1.0, 4.0]);
        assert_eq!(s.pitch_curve().len(), 2);

        assert!(matches!(
            summarize_brand(&BTreeMap::new(), "x"),
            Err(ErbError::EmptyInput)
        ));
    }

    #[test]
    fn duration_mode_parsing() {
        assert_eq!("1.2".parse::<DurationMode>().unwrap(), DurationMode::OnePointTwoSeconds);
        assert_eq!("full".parse::<DurationMode>().unwrap(), DurationMode::Full);
        assert!("2.0".parse::<DurationMode>().is_err());
    }
}

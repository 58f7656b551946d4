//! STFT power spectrograms and max-referenced mel spectrograms.
//!
//! The classifier input is a `128 x 35` mel image: 128 mel bands over
//! 0–22.05 kHz and the 35 centered frames a 0.2 s slice produces at
//! `fft_size = 1024`, `hop = 256`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioClip;
use crate::error::SpectralError;
use crate::matrix::Matrix;

pub const FFT_SIZE: usize = 1024;
pub const HOP: usize = 256;
pub const N_MELS: usize = 128;
/// Frame count of a model input image.
pub const MODEL_FRAMES: usize = 35;
pub const DB_FLOOR: f64 = -80.0;

/// Power spectrogram, `frames x (fft_size / 2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub power: Matrix,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.power.rows()
    }

    pub fn bins(&self) -> usize {
        self.power.cols()
    }
}

/// Mel spectrogram in normalized dB, `frames x n_mels`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Matrix,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    /// Writes one CSV row per frame, one column per mel band.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.n_mels).map(|b| format!("mel_{b}")).collect();
        w.write_record(&header)?;
        for row in self.values.iter_rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary (P5) 8-bit PGM: one column per frame, low bands at the bottom.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (frames, bands) = self.values.shape();
        let mut out = format!("P5\n{frames} {bands}\n255\n").into_bytes();
        for band in (0..bands).rev() {
            for frame in 0..frames {
                let v = self.values.get(frame, band);
                out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }
}

/// Fixed-shape classifier image: rows are mel bands, columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    image: Matrix,
}

impl ModelInput {
    /// Wraps an arbitrary `bands x frames` image. The model checks the shape.
    pub fn new(image: Matrix) -> Self {
        Self { image }
    }

    pub fn image(&self) -> &Matrix {
        &self.image
    }

    pub fn shape(&self) -> (usize, usize) {
        self.image.shape()
    }
}

fn hann(n: usize) -> Vec<f64> {
    // periodic Hann, matching the usual STFT convention
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable STFT plan.
pub struct Stft {
    fft_size: usize,
    hop: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft")
            .field("fft_size", &self.fft_size)
            .field("hop", &self.hop)
            .finish()
    }
}

impl Stft {
    pub fn new(fft_size: usize, hop: usize) -> Result<Self, SpectralError> {
        if fft_size < 2 || hop == 0 {
            return Err(SpectralError::InvalidRange(format!(
                "fft_size {fft_size} and hop {hop} must be positive"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Self {
            fft_size,
            hop,
            window: hann(fft_size),
            fft,
        })
    }

    /// Centered, reflect-padded STFT. Produces `1 + N / hop` frames.
    pub fn power(&self, clip: &AudioClip) -> Result<Spectrogram, SpectralError> {
        let x = clip.samples();
        let n = x.len();
        if n < self.fft_size {
            return Err(SpectralError::WindowOverflow {
                samples: n,
                fft_size: self.fft_size,
            });
        }
        let pad = (self.fft_size / 2) as i64;
        let frames = 1 + n / self.hop;
        let bins = self.fft_size / 2 + 1;
        let mut power = Matrix::zeros(frames, bins);
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        let last = n as i64 - 1;
        for t in 0..frames {
            let start = (t * self.hop) as i64 - pad;
            for (i, (slot, w)) in buf.iter_mut().zip(&self.window).enumerate() {
                let mut idx = start + i as i64;
                if idx < 0 {
                    idx = -idx;
                } else if idx > last {
                    idx = 2 * last - idx;
                }
                *slot = Complex::new(x[idx as usize] * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (p, c) in power.row_mut(t).iter_mut().zip(&buf[..bins]) {
                *p = c.norm_sqr();
            }
        }
        Ok(Spectrogram {
            power,
            fft_size: self.fft_size,
            hop: self.hop,
            sample_rate_hz: clip.sample_rate_hz(),
        })
    }
}

/// Power spectrogram with a Hann window.
pub fn stft(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<Spectrogram, SpectralError> {
    Stft::new(fft_size, hop)?.power(clip)
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// The `n_mels + 2` triangle knots (edges and centers) in Hz, uniformly
/// spaced on the mel scale.
fn mel_knots(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Center frequency of each mel filter.
pub fn mel_centers_hz(n_mels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let knots = mel_knots(n_mels, fmin, fmax);
    knots[1..=n_mels].to_vec()
}

/// Triangular mel filterbank, `n_mels x (fft_size / 2 + 1)`.
///
/// Each weight is the mean of the unit-peak triangle over the frequency span
/// of the FFT bin (`f_k ± sr / 2n`). Averaging rather than point-sampling
/// keeps filters narrower than one bin from vanishing at low frequencies.
pub fn mel_filterbank(
    sample_rate_hz: u32,
    fft_size: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<Matrix, SpectralError> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    if n_mels == 0 || fft_size < 2 || !(0.0 <= fmin && fmin < fmax && fmax <= nyquist) {
        return Err(SpectralError::InvalidRange(format!(
            "need n_mels >= 1 and 0 <= fmin < fmax <= {nyquist}; got n_mels={n_mels}, fmin={fmin}, fmax={fmax}"
        )));
    }
    let bins = fft_size / 2 + 1;
    let df = sample_rate_hz as f64 / fft_size as f64;
    let knots = mel_knots(n_mels, fmin, fmax);
    let mut fb = Matrix::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (l, c, r) = (knots[m], knots[m + 1], knots[m + 2]);
        for k in 0..bins {
            let a = k as f64 * df - df / 2.0;
            let b = a + df;
            if b <= l || a >= r {
                continue;
            }
            let area = ramp_integral(a, b, l, c, true) + ramp_integral(a, b, c, r, false);
            fb.set(m, k, area / df);
        }
    }
    Ok(fb)
}

/// Integral over `[a, b]` of the linear ramp on `[lo, hi]` that rises 0→1
/// (`rising`) or falls 1→0.
fn ramp_integral(a: f64, b: f64, lo: f64, hi: f64, rising: bool) -> f64 {
    let (x0, x1) = (a.max(lo), b.min(hi));
    if x1 <= x0 || hi <= lo {
        return 0.0;
    }
    let mid = 0.5 * (x0 + x1);
    let h = if rising {
        (mid - lo) / (hi - lo)
    } else {
        (hi - mid) / (hi - lo)
    };
    h * (x1 - x0)
}

/// Mel spectrogram pipeline with its filterbank precomputed.
#[derive(Debug)]
pub struct MelAnalyzer {
    stft: Stft,
    filterbank: Matrix,
    sample_rate_hz: u32,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
}

impl MelAnalyzer {
    /// Defaults: 1024-point FFT, hop 256, 128 bands over `[0, sr/2]`.
    pub fn new(sample_rate_hz: u32) -> Result<Self, SpectralError> {
        Self::with_params(
            sample_rate_hz,
            FFT_SIZE,
            HOP,
            N_MELS,
            0.0,
            sample_rate_hz as f64 / 2.0,
        )
    }

    pub fn with_params(
        sample_rate_hz: u32,
        fft_size: usize,
        hop: usize,
        n_mels: usize,
        fmin: f64,
        fmax: f64,
    ) -> Result<Self, SpectralError> {
        Ok(Self {
            stft: Stft::new(fft_size, hop)?,
            filterbank: mel_filterbank(sample_rate_hz, fft_size, n_mels, fmin, fmax)?,
            sample_rate_hz,
            n_mels,
            fmin,
            fmax,
        })
    }

    pub fn filterbank(&self) -> &Matrix {
        &self.filterbank
    }

    pub fn analyze(&self, clip: &AudioClip) -> Result<MelSpectrogram, SpectralError> {
        if clip.sample_rate_hz() != self.sample_rate_hz {
            return Err(SpectralError::InvalidRange(format!(
                "clip rate {} Hz does not match analyzer rate {} Hz",
                clip.sample_rate_hz(),
                self.sample_rate_hz
            )));
        }
        let spec = self.stft.power(clip)?;
        let frames = spec.frames();
        let mut mel = Matrix::zeros(frames, self.n_mels);
        for t in 0..frames {
            let p = spec.power.row(t);
            for m in 0..self.n_mels {
                let w = self.filterbank.row(m);
                mel.set(t, m, w.iter().zip(p).map(|(a, b)| a * b).sum());
            }
        }
        let reference = mel.max();
        for v in mel.as_mut_slice() {
            let db = if reference > 0.0 && *v > 0.0 {
                (10.0 * (*v / reference).log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            };
            *v = (db - DB_FLOOR) / -DB_FLOOR;
        }
        Ok(MelSpectrogram {
            values: mel,
            n_mels: self.n_mels,
            fmin: self.fmin,
            fmax: self.fmax,
        })
    }
}

/// Mel spectrogram with default parameters at the clip's own rate.
pub fn mel_spectrogram(clip: &AudioClip) -> Result<MelSpectrogram, SpectralError> {
    MelAnalyzer::new(clip.sample_rate_hz())?.analyze(clip)
}

/// Center-crops or zero-pads the frame axis to 35 frames and transposes to
/// a `128 x 35` band-by-frame image.
pub fn to_model_input(mel: &MelSpectrogram) -> Result<ModelInput, SpectralError> {
    if mel.n_mels != N_MELS || mel.values.cols() != N_MELS {
        return Err(SpectralError::BandMismatch {
            expected: N_MELS,
            found: mel.values.cols(),
        });
    }
    let frames = mel.frames();
    let mut image = Matrix::zeros(N_MELS, MODEL_FRAMES);
    if frames >= MODEL_FRAMES {
        let offset = (frames - MODEL_FRAMES) / 2;
        for f in 0..MODEL_FRAMES {
            for b in 0..N_MELS {
                image.set(b, f, mel.values.get(offset + f, b));
            }
        }
    } else {
        let offset = (MODEL_FRAMES - frames) / 2;
        for f in 0..frames {
            for b in 0..N_MELS {
                image.set(b, offset + f, mel.values.get(f, b));
            }
        }
    }
    Ok(ModelInput { image })
}

//! WAV ingestion, band-limited resampling and fixed-length slicing.

use std::f64::consts::PI;
use std::io::Cursor;
use std::path::Path;

use crate::error::AudioError;

/// A mono recording normalized to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    source_id: String,
}

impl AudioClip {
    /// Builds a clip, enforcing finite samples in `[-1, 1]` and a positive rate.
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: u32,
        source_id: impl Into<String>,
    ) -> Result<Self, AudioError> {
        if sample_rate_hz == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !s.is_finite() || s.abs() > 1.0)
        {
            return Err(AudioError::InvalidClip(format!(
                "sample {i} = {} is not a finite value in [-1, 1]",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    /// Returns a copy with every sample multiplied by `gain`, clamped to `[-1, 1]`.
    pub fn scaled(&self, gain: f64) -> AudioClip {
        AudioClip {
            samples: self
                .samples
                .iter()
                .map(|s| (s * gain).clamp(-1.0, 1.0))
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
            source_id: self.source_id.clone(),
        }
    }
}

/// Equal-length windows cut from one parent clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    pub slices: Vec<AudioClip>,
    pub window_s: f64,
    pub hop_s: f64,
    pub parent_source_id: String,
}

impl SliceSet {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// Sample encoding used when writing WAV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

/// Loads a PCM WAV file (16/24-bit integer or 32-bit float, mono or stereo).
///
/// Stereo is averaged to mono; integer samples are divided by 2^(bits-1).
/// The file stem becomes the clip's `source_id`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(AudioError::FileNotFound(path.to_path_buf()));
    }
    let bytes = std::fs::read(path)?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_wav(&bytes, source_id)
}

/// Decodes an in-memory WAV file. Same contract as [`load_wav`].
pub fn decode_wav(bytes: &[u8], source_id: impl Into<String>) -> Result<AudioClip, AudioError> {
    if looks_compressed(bytes) {
        return Err(AudioError::UnsupportedFormat(
            "compressed audio (MP3/M4A) is not supported; convert to WAV".into(),
        ));
    }
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} channels; only mono and stereo are supported",
            spec.channels
        )));
    }
    if spec.sample_rate == 0 {
        return Err(AudioError::CorruptHeader("sample rate is zero".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32_768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| v as f64 / 8_388_608.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "{bits}-bit {fmt:?} samples; expected 16/24-bit int or 32-bit float"
            )))
        }
    };
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(AudioError::InvalidClip("non-finite float sample".into()));
    }
    let samples: Vec<f64> = if spec.channels == 2 {
        if interleaved.len() % 2 != 0 {
            return Err(AudioError::CorruptHeader("odd sample count in stereo data".into()));
        }
        interleaved
            .chunks_exact(2)
            .map(|lr| ((lr[0] + lr[1]) / 2.0).clamp(-1.0, 1.0))
            .collect()
    } else {
        interleaved.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect()
    };
    if samples.is_empty() {
        return Err(AudioError::InvalidClip("data chunk holds no samples".into()));
    }
    AudioClip::new(samples, spec.sample_rate, source_id)
}

fn looks_compressed(bytes: &[u8]) -> bool {
    bytes.starts_with(b"ID3")
        || (bytes.len() >= 2 && bytes[0] == 0xFF && bytes[1] & 0xE0 == 0xE0)
        || (bytes.len() >= 8 && &bytes[4..8] == b"ftyp")
}

fn map_hound(err: hound::Error) -> AudioError {
    match err {
        // decoding reads from memory, so any I/O failure means the bytes ran out
        hound::Error::IoError(e) => AudioError::CorruptHeader(format!("truncated file: {e}")),
        hound::Error::FormatError(msg) => AudioError::CorruptHeader(msg.to_string()),
        hound::Error::TooWide => AudioError::UnsupportedFormat("sample too wide".into()),
        hound::Error::UnfinishedSample => {
            AudioError::CorruptHeader("data chunk ends mid-sample".into())
        }
        hound::Error::Unsupported => AudioError::UnsupportedFormat("unsupported codec".into()),
        hound::Error::InvalidSampleFormat => {
            AudioError::UnsupportedFormat("invalid sample format".into())
        }
    }
}

/// Encodes a mono clip as a WAV file in memory.
pub fn encode_wav(clip: &AudioClip, encoding: WavEncoding) -> Result<Vec<u8>, AudioError> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut buf = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut buf, spec).map_err(map_hound)?;
        for &s in &clip.samples {
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = (s * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
                    writer.write_sample(v)
                }
                WavEncoding::Pcm24 => {
                    let v = (s * 8_388_608.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32;
                    writer.write_sample(v)
                }
                WavEncoding::Float32 => writer.write_sample(s as f32),
            }
            .map_err(map_hound)?;
        }
        writer.finalize().map_err(map_hound)?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav(
    path: impl AsRef<Path>,
    clip: &AudioClip,
    encoding: WavEncoding,
) -> Result<(), AudioError> {
    let bytes = encode_wav(clip, encoding)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// One-sided kernel half-width in input samples.
const SINC_TAPS_PER_SIDE: usize = 32;
const KAISER_BETA: f64 = 8.6;

/// Windowed-sinc resampling with a Kaiser window, 32 taps per side.
///
/// Output length is `ceil(N * target / source)`. When downsampling the cutoff
/// tracks the target Nyquist so nothing aliases. Output samples are clamped to
/// `[-1, 1]` to absorb Gibbs overshoot on full-scale material.
pub fn resample(clip: &AudioClip, target_rate_hz: u32) -> Result<AudioClip, AudioError> {
    if target_rate_hz == 0 {
        return Err(AudioError::InvalidClip("target rate must be positive".into()));
    }
    let source_rate = clip.sample_rate_hz;
    if source_rate == target_rate_hz {
        return Ok(clip.clone());
    }
    let n = clip.samples.len() as u64;
    let out_len = (n * target_rate_hz as u64).div_ceil(source_rate as u64) as usize;
    let step = source_rate as f64 / target_rate_hz as f64;
    let cutoff = if target_rate_hz < source_rate {
        target_rate_hz as f64 / source_rate as f64
    } else {
        1.0
    };
    let half = SINC_TAPS_PER_SIDE as i64;
    let i0_beta = bessel_i0(KAISER_BETA);
    let x = &clip.samples;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 * step;
        let base = t.floor() as i64;
        let mut acc = 0.0;
        for k in (base - half + 1)..=(base + half) {
            if k < 0 || k as usize >= x.len() {
                continue;
            }
            let d = t - k as f64;
            let r = d / SINC_TAPS_PER_SIDE as f64;
            if r.abs() >= 1.0 {
                continue;
            }
            let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
            acc += x[k as usize] * cutoff * sinc(cutoff * d) * window;
        }
        out.push(acc.clamp(-1.0, 1.0));
    }
    AudioClip::new(out, target_rate_hz, clip.source_id.clone())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Cuts `clip` into windows of `window_s` seconds starting every `hop_s`
/// seconds. Slice `i` starts at sample `round(i * hop_s * rate)`; a trailing
/// remainder shorter than one window is dropped.
pub fn slice(clip: &AudioClip, window_s: f64, hop_s: f64) -> Result<SliceSet, AudioError> {
    if !(window_s > 0.0 && hop_s > 0.0) {
        return Err(AudioError::InvalidClip(format!(
            "window ({window_s}) and hop ({hop_s}) must be positive"
        )));
    }
    let rate = clip.sample_rate_hz as f64;
    let window = (window_s * rate).round() as usize;
    if window == 0 {
        return Err(AudioError::InvalidClip("window is shorter than one sample".into()));
    }
    let mut slices = Vec::new();
    for i in 0usize.. {
        let start = (i as f64 * hop_s * rate).round() as usize;
        if start + window > clip.samples.len() {
            break;
        }
        slices.push(AudioClip {
            samples: clip.samples[start..start + window].to_vec(),
            sample_rate_hz: clip.sample_rate_hz,
            source_id: clip.source_id.clone(),
        });
    }
    Ok(SliceSet {
        slices,
        window_s,
        hop_s,
        parent_source_id: clip.source_id.clone(),
    })
}

/// Slices with the default 0.2 s window and 0.2 s hop.
pub fn slice_default(clip: &AudioClip) -> SliceSet {
    slice(clip, DEFAULT_WINDOW_S, DEFAULT_WINDOW_S).expect("default window is valid")
}

pub const DEFAULT_WINDOW_S: f64 = 0.2;

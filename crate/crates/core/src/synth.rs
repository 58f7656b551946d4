//! Synthetic seven-brand piano corpus.
//!
//! Each brand is a damped harmonic-tone voice with its own string
//! inharmonicity `B` (partial `n` sits at `n f0 sqrt(1 + B n^2)`), spectral
//! tilt (partial amplitude `n^-tilt`), decay rate and hammer strike position
//! (partial amplitude scaled by `|sin(pi n p)|`). Every note gets small seeded jitter
//! and white noise at a fixed SNR. Used for the end-to-end learning check and
//! the examples.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::{write_wav, AudioClip, WavEncoding};
use crate::classifier::Entry;
use crate::error::Error;
use crate::pipeline::{clip_to_inputs, ManifestRow};
use crate::PIANO_LABELS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrandVoice {
    pub label: &'static str,
    pub inharmonicity: f64,
    pub tilt: f64,
    /// Decay rate of the fundamental in 1/s; partial `n` decays `sqrt(n)` times faster.
    pub decay: f64,
    /// Hammer position as a fraction of string length; partials with a node there are suppressed.
    pub strike: f64,
}

/// One voice per reference label, in label order.
pub fn brand_voices() -> [BrandVoice; 7] {
    let b = [1e-3, 4e-3, 1e-5, 2.5e-4, 2e-3, 3e-5, 1e-4];
    let tilt = [2.6, 1.4, 0.4, 3.2, 0.9, 1.9, 2.2];
    let decay = [1.6, 16.8, 1.0, 6.6, 4.1, 2.6, 10.5];
    let strike = [3.0, 8.0, 6.0, 4.0, 9.0, 7.0, 5.0].map(|d: f64| 1.0 / d);
    std::array::from_fn(|i| BrandVoice {
        label: PIANO_LABELS[i],
        inharmonicity: b[i],
        tilt: tilt[i],
        decay: decay[i],
        strike: strike[i],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Notes per brand, spread evenly over MIDI 21..=108 (88 = every key).
    pub notes_per_brand: usize,
    pub duration_s: f64,
    pub snr_db: f64,
    pub sample_rate_hz: u32,
    pub max_partials: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            notes_per_brand: 88,
            duration_s: 0.6,
            snr_db: 30.0,
            sample_rate_hz: 44_100,
            max_partials: 40,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn midi_notes(&self) -> Vec<u8> {
        let n = self.notes_per_brand.clamp(1, 88);
        if n == 1 {
            return vec![60];
        }
        (0..n).map(|i| 21 + ((i * 87) as f64 / (n - 1) as f64).round() as u8).collect()
    }
}

pub fn midi_to_hz(midi: u8) -> f64 {
    440.0 * 2f64.powf((midi as f64 - 69.0) / 12.0)
}

/// Renders one note; deterministic in `(brand, midi, config.seed)`.
pub fn render_note(brand: usize, midi: u8, config: &SynthConfig) -> AudioClip {
    let voice = brand_voices()[brand];
    let mut rng = ChaCha8Rng::seed_from_u64(
        config.seed ^ ((brand as u64) << 32) ^ ((midi as u64) << 8) ^ 0x9e37_79b9,
    );
    let sr = config.sample_rate_hz as f64;
    let n = (config.duration_s * sr).round() as usize;
    let f0 = midi_to_hz(midi);
    let b = voice.inharmonicity * rng.random_range(0.9..1.1);
    let tilt = voice.tilt + rng.random_range(-0.05..0.05);
    let decay = voice.decay * rng.random_range(0.9..1.1);
    let ceiling = (0.45 * sr).min(20_000.0);

    let mut x = vec![0.0; n];
    for k in 1..=config.max_partials {
        let kf = k as f64;
        let f = kf * f0 * (1.0 + b * kf * kf).sqrt();
        if f >= ceiling {
            break;
        }
        let amp = kf.powf(-tilt) * (std::f64::consts::PI * kf * voice.strike).sin().abs().max(0.02);
        let w = 2.0 * std::f64::consts::PI * f / sr;
        let damp = (-decay * kf.sqrt() / sr).exp();
        // phasor recurrence: (c, s) rotates by w and shrinks by damp each sample
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (rot_s, rot_c) = w.sin_cos();
        let (mut s, mut c) = phase.sin_cos();
        let (rot_c, rot_s) = (rot_c * damp, rot_s * damp);
        for v in x.iter_mut() {
            *v += amp * s;
            let ns = s * rot_c + c * rot_s;
            c = c * rot_c - s * rot_s;
            s = ns;
        }
    }
    // 5 ms attack ramp
    let attack = ((0.005 * sr) as usize).min(n);
    for (i, v) in x.iter_mut().take(attack).enumerate() {
        *v *= i as f64 / attack as f64;
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    x.iter_mut().for_each(|v| *v *= 0.5 / peak);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    let sigma = rms * 10f64.powf(-config.snr_db / 20.0);
    let noise = Normal::new(0.0, sigma.max(1e-12)).expect("finite sigma");
    for v in x.iter_mut() {
        *v = (*v + noise.sample(&mut rng)).clamp(-1.0, 1.0);
    }
    AudioClip::new(x, config.sample_rate_hz, source_id(brand, midi)).expect("samples are clamped")
}

pub fn source_id(brand: usize, midi: u8) -> String {
    format!("{}_m{midi:03}", PIANO_LABELS[brand])
}

/// Every note of every brand as `(clip, label)`.
pub fn corpus(config: &SynthConfig) -> Vec<(AudioClip, usize)> {
    let notes = config.midi_notes();
    (0..PIANO_LABELS.len())
        .flat_map(|b| notes.iter().map(move |&m| (b, m)))
        .map(|(b, m)| (render_note(b, m, config), b))
        .collect()
}

/// The corpus sliced into labelled model inputs.
pub fn corpus_entries(config: &SynthConfig) -> Result<Vec<Entry>, Error> {
    let mut entries = Vec::new();
    for (clip, label) in corpus(config) {
        for input in clip_to_inputs(&clip)? {
            entries.push(Entry {
                input,
                label,
                source_id: clip.source_id().to_string(),
            });
        }
    }
    Ok(entries)
}

/// Writes one 16-bit WAV per note into `dir` and returns manifest rows with
/// paths relative to `dir`.
pub fn write_corpus(dir: impl AsRef<Path>, config: &SynthConfig) -> Result<Vec<ManifestRow>, Error> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut rows = Vec::new();
    for (clip, label) in corpus(config) {
        let name = format!("{}.wav", clip.source_id());
        write_wav(dir.join(&name), &clip, WavEncoding::Pcm16)?;
        rows.push(ManifestRow {
            path: name.into(),
            label: PIANO_LABELS[label].to_string(),
            source_id: clip.source_id().to_string(),
        });
    }
    Ok(rows)
}

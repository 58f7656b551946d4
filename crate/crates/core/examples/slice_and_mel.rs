//! Slice a recording into 0.2 s windows and turn each into a classifier image.
//!
//! ```text
//! cargo run --example slice_and_mel -- [note.wav] [first-slice.pgm]
//! ```
//!
//! Without a WAV argument a synthetic middle C is used.

use pianoq::audio::{load_wav, resample, slice_default};
use pianoq::spectral::{mel_spectrogram, to_model_input};
use pianoq::synth::{render_note, SynthConfig};
use pianoq::WORKING_RATE_HZ;

fn main() -> Result<(), pianoq::Error> {
    let mut args = std::env::args().skip(1);
    let clip = match args.next() {
        Some(path) => load_wav(path)?,
        None => render_note(5, 60, &SynthConfig { duration_s: 1.0, ..SynthConfig::default() }),
    };
    println!(
        "{}: {} samples at {} Hz ({:.3} s)",
        clip.source_id(),
        clip.len(),
        clip.sample_rate_hz(),
        clip.duration_s()
    );
    let clip = resample(&clip, WORKING_RATE_HZ)?;
    let slices = slice_default(&clip);
    println!("{} slices of 0.2 s", slices.len());
    for (i, s) in slices.slices.iter().enumerate() {
        let mel = mel_spectrogram(s)?;
        let input = to_model_input(&mel)?;
        let image = input.image();
        let mean = image.as_slice().iter().sum::<f64>() / image.as_slice().len() as f64;
        println!("  slice {i:03}: {}x{} image, mean level {mean:.3}", input.shape().0, input.shape().1);
        if i == 0 {
            if let Some(path) = args.next() {
                std::fs::write(&path, mel.to_pgm())?;
                println!("  wrote {path}");
            }
        }
    }
    Ok(())
}

//! ERB bandwidths, the 77-channel filterbank and per-brand ERB curves of the
//! synthetic voices.
//!
//! ```text
//! cargo run --release --example erb_analysis
//! ```

use std::collections::BTreeMap;

use pianoq::erb::{
    build_filterbank, erb_glasberg90, erb_moore83, erb_representation, summarize_brand, DurationMode,
};
use pianoq::synth::{render_note, SynthConfig};
use pianoq::PIANO_LABELS;

fn main() -> Result<(), pianoq::Error> {
    println!("  f kHz   quadratic   linear");
    for f in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        println!("{f:>7.2} {:>11.3} {:>8.3}", erb_moore83(f)?, erb_glasberg90(f)?);
    }

    let bank = build_filterbank(44_100)?;
    println!("\n{} channels", bank.channels());
    for i in (0..bank.channels()).step_by(19) {
        println!(
            "  channel {i:>2}: center {:>8.1} Hz, bandwidth {:>7.1} Hz",
            bank.center_freqs_hz[i], bank.bandwidths_hz[i]
        );
    }

    let config = SynthConfig {
        duration_s: 1.2,
        ..SynthConfig::default()
    };
    println!("\nmean ERB band level by register (dB)");
    for (brand, label) in PIANO_LABELS.iter().enumerate() {
        let mut reps = BTreeMap::new();
        for key in (1..=88u32).step_by(4) {
            let clip = render_note(brand, key as u8 + 20, &config);
            reps.insert(key, erb_representation(&clip, &bank, DurationMode::OnePointTwoSeconds)?);
        }
        let summary = summarize_brand(&reps, label)?;
        let curve = summary.pitch_curve();
        let db = |lo: u32, hi: u32| {
            let v: Vec<f64> = curve.iter().filter(|(p, _)| (lo..hi).contains(p)).map(|(_, v)| *v).collect();
            10.0 * (v.iter().sum::<f64>() / v.len() as f64).log10()
        };
        println!(
            "{label:>11}  low {:>6.1}  middle {:>6.1}  high {:>6.1}",
            db(0, 30),
            db(30, 60),
            db(60, 89)
        );
    }
    Ok(())
}

//! Write the synthetic corpus as WAV files plus a `path,label,source_id`
//! manifest, ready for `pianoq train` and `pianoq eval`.
//!
//! ```text
//! cargo run --release --example synth_corpus -- <out-dir> [notes-per-brand]
//! pianoq train <out-dir>/manifest.csv --out model.pqm --epochs 60 --learning-rate 0.25
//! ```

use pianoq::pipeline::write_manifest;
use pianoq::synth::{brand_voices, write_corpus, SynthConfig};

fn main() -> Result<(), pianoq::Error> {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next() else {
        eprintln!("usage: synth_corpus <out-dir> [notes-per-brand]");
        std::process::exit(1);
    };
    let notes = args.next().and_then(|s| s.parse().ok()).unwrap_or(88);
    let config = SynthConfig {
        notes_per_brand: notes,
        ..SynthConfig::default()
    };
    for v in brand_voices() {
        println!(
            "{:>11}  B {:.1e}  tilt {:.1}  decay {:>4.1}/s  strike 1/{:.0}",
            v.label,
            v.inharmonicity,
            v.tilt,
            v.decay,
            1.0 / v.strike
        );
    }
    let rows = write_corpus(&dir, &config)?;
    let manifest = std::path::Path::new(&dir).join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    println!("{} recordings, manifest at {}", rows.len(), manifest.display());
    Ok(())
}

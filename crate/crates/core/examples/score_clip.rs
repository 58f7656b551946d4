//! Score a recording against a quality profile.
//!
//! ```text
//! cargo run --release --example score_clip -- [model.pqm] [note.wav] [profile.json]
//! ```
//!
//! Without a model, a constant model that always answers "Steinway" is used;
//! without a WAV, a synthetic note; without a profile, the bundled example.

use pianoq::audio::load_wav;
use pianoq::classifier::{checkpoint, MicroCnn};
use pianoq::pipeline::{score_clip, to_json};
use pianoq::scoring::QualityProfile;
use pianoq::synth::{render_note, SynthConfig};

fn main() -> Result<(), pianoq::Error> {
    let mut args = std::env::args().skip(1);
    let model = match args.next().filter(|a| a != "-") {
        Some(path) => checkpoint::load(path)?,
        None => {
            let mut m = MicroCnn::zeros();
            m.tensor_mut("fc.bias").expect("fc.bias exists")[5] = 1000.0;
            m
        }
    };
    let clip = match args.next().filter(|a| a != "-") {
        Some(path) => load_wav(path)?,
        None => render_note(2, 64, &SynthConfig { duration_s: 1.5, ..SynthConfig::default() }),
    };
    let profile_path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/profile.example.json").to_string());
    let profile = QualityProfile::load(&profile_path)?;

    let response = score_clip(&model, &profile, &clip)?;
    let mut ranked = response.probabilities.clone();
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    for p in &ranked {
        println!("{:>11} {:6.2}%  {}", p.label, p.probability * 100.0, "#".repeat((p.probability * 40.0).round() as usize));
    }
    println!("score {:.2} from {} slices", response.expected_score, response.slices_used);
    println!("{}", to_json(&response));
    Ok(())
}

//! Train the micro-CNN on the synthetic seven-brand corpus and report
//! held-out metrics.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [out.pqm] [learning-rate]
//! ```
//!
//! Defaults are 60 epochs at learning rate 0.25, the acceptance settings.

use std::time::Instant;

use pianoq::classifier::{checkpoint, evaluate, train, DatasetIndex, Split, TrainConfig};
use pianoq::synth::{corpus_entries, SynthConfig};

fn main() -> Result<(), pianoq::Error> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(60);
    let out = args.next();
    let lr = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.25);

    let t = Instant::now();
    let entries = corpus_entries(&SynthConfig::default())?;
    println!("{} slices in {:.1}s", entries.len(), t.elapsed().as_secs_f64());

    let index = DatasetIndex::new(entries, 0)?;
    for part in [Split::Train, Split::Val, Split::Test] {
        println!("{part}: {:?}", index.class_counts(part));
    }

    let config = TrainConfig { epochs, learning_rate: lr, ..TrainConfig::default() };
    let t = Instant::now();
    let (model, history) = train(&index, &config)?;
    for e in &history.epochs {
        println!(
            "epoch {:>2}  train loss {:.4} acc {:.3}  val loss {:.4} acc {:.3}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        );
    }
    println!("trained in {:.1}s, kept epoch {}", t.elapsed().as_secs_f64(), history.best_epoch);

    let m = evaluate(&model, &index, Split::Test)?;
    println!("test accuracy {:.4}  weighted F1 {:.4}", m.accuracy, m.weighted_f1);
    for (label, row) in m.labels.iter().zip(&m.confusion) {
        println!("{label:>11} {row:?}");
    }
    if let Some(path) = out {
        checkpoint::save(&model, &path)?;
        println!("saved {path} ({})", checkpoint::model_id(&model));
    }
    Ok(())
}

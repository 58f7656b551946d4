//! Class weights from sample counts and how the focal term reshapes the loss.
//!
//! ```text
//! cargo run --example focal_weights -- [count ...]
//! ```

use pianoq::classifier::{compute_alphas, focal_loss, ClassWeights, FocalLossConfig};

fn main() -> Result<(), pianoq::Error> {
    let counts: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let counts = if counts.len() >= 2 {
        counts
    } else {
        vec![73, 338, 336, 198, 131, 134, 232]
    };
    let weights = compute_alphas(&counts)?;
    println!("count   alpha");
    for (c, a) in counts.iter().zip(weights.alphas()) {
        println!("{c:>5}   {a:.4}");
    }
    println!("sum {:.15}", weights.alphas().iter().sum::<f64>());

    println!("\nloss of the true class at probability p (alpha = 1)");
    print!("   p   ");
    let gammas = [0.0, 0.5, 1.0, 2.0, 5.0];
    for g in gammas {
        print!("  gamma {g:<4}");
    }
    println!();
    let unit = ClassWeights::new(vec![1.0, 0.0])?;
    for p in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        print!("{p:>5.2}  ");
        for g in gammas {
            let cfg = FocalLossConfig::new(unit.clone(), g)?;
            print!("  {:>10.6}", focal_loss(&[p, 1.0 - p], 0, &cfg));
        }
        println!();
    }
    Ok(())
}

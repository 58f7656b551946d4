//! PCA and t-SNE maps of per-note ERB vectors for the seven synthetic voices.
//!
//! ```text
//! cargo run --release --example embed_erb -- [seed]
//! ```

use pianoq::embedding::{pca_2d, tsne_2d, EmbeddingMeta, TsneConfig};
use pianoq::erb::{build_filterbank, erb_representation, DurationMode};
use pianoq::matrix::Matrix;
use pianoq::synth::{render_note, SynthConfig};
use pianoq::PIANO_LABELS;

fn purity(points: &Matrix, labels: &[String], k: usize) -> f64 {
    let mut agree = 0;
    for i in 0..points.rows() {
        let mut d: Vec<(f64, usize)> = (0..points.rows())
            .filter(|&j| j != i)
            .map(|j| {
                let (a, b) = (points.row(i), points.row(j));
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2), j)
            })
            .collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0));
        agree += d.iter().take(k).filter(|(_, j)| labels[*j] == labels[i]).count();
    }
    agree as f64 / (points.rows() * k) as f64
}

fn main() -> Result<(), pianoq::Error> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bank = build_filterbank(44_100)?;
    let config = SynthConfig {
        duration_s: 1.0,
        ..SynthConfig::default()
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (brand, label) in PIANO_LABELS.iter().enumerate() {
        for midi in (33..=96).step_by(3) {
            let rep = erb_representation(&render_note(brand, midi, &config), &bank, DurationMode::OneSecond)?;
            // log power keeps loud low channels from dominating the variance
            rows.push(rep.time_mean.iter().map(|p| 10.0 * (p + 1e-12).log10()).collect::<Vec<_>>());
            labels.push(label.to_string());
        }
    }
    let points = Matrix::from_rows(&rows);
    println!("{} notes x {} channels", points.rows(), points.cols());

    let pca = pca_2d(&points, &labels)?;
    if let EmbeddingMeta::Pca { explained_ratio, .. } = pca.meta {
        println!(
            "PCA: components explain {:.1}% and {:.1}%",
            explained_ratio[0] * 100.0,
            explained_ratio[1] * 100.0
        );
    }
    println!("PCA 5-NN brand purity {:.3}", purity(&pca.points, &labels, 5));

    let tsne = tsne_2d(&points, &labels, &TsneConfig::with_seed(seed))?;
    if let EmbeddingMeta::Tsne { kl_trace, perplexity, .. } = &tsne.meta {
        println!(
            "t-SNE (perplexity {perplexity}): KL {:.3} -> {:.3}",
            kl_trace.first().unwrap_or(&f64::NAN),
            kl_trace.last().unwrap_or(&f64::NAN)
        );
    }
    println!("t-SNE 5-NN brand purity {:.3}", purity(&tsne.points, &labels, 5));
    Ok(())
}

//! Two-dimensional embeddings of ERB vectors (PCA and exact t-SNE).

mod pca;
mod tsne;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use pca::pca_2d;
pub use tsne::{tsne_2d, TsneConfig};

use crate::error::EmbeddingError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmbeddingMeta {
    Pca {
        /// Variance along each of the two components.
        explained_variance: [f64; 2],
        /// Share of the total variance captured by each component.
        explained_ratio: [f64; 2],
    },
    Tsne {
        perplexity: f64,
        iterations: usize,
        seed: u64,
        /// KL divergence of the final layout, one entry per iteration.
        kl_trace: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    /// `N x 2`.
    pub points: Matrix,
    pub labels: Vec<String>,
    pub method: Method,
    pub meta: EmbeddingMeta,
}

impl Embedding2D {
    /// Writes `x,y,label` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "label"])?;
        for (row, label) in self.points.iter_rows().zip(&self.labels) {
            w.write_record([row[0].to_string(), row[1].to_string(), label.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_input(points: &Matrix, labels: &[String], min_rows: usize) -> Result<(), EmbeddingError> {
    if points.rows() < min_rows {
        return Err(EmbeddingError::DegenerateInput(format!(
            "{} points; at least {min_rows} are required",
            points.rows()
        )));
    }
    if points.cols() == 0 {
        return Err(EmbeddingError::DegenerateInput("zero-dimensional points".into()));
    }
    if labels.len() != points.rows() {
        return Err(EmbeddingError::DegenerateInput(format!(
            "{} labels for {} points",
            labels.len(),
            points.rows()
        )));
    }
    if !points.all_finite() {
        return Err(EmbeddingError::NonFinite);
    }
    Ok(())
}

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_input, Embedding2D, EmbeddingMeta, Method};
use crate::error::EmbeddingError;
use crate::matrix::Matrix;

/// Projects mean-centered points onto the two leading eigenvectors of their
/// sample covariance.
///
/// Each component's sign is fixed so its largest-magnitude loading is
/// positive, which makes the output independent of the eigensolver's sign
/// choice.
pub fn pca_2d(points: &Matrix, labels: &[String]) -> Result<Embedding2D, EmbeddingError> {
    check_input(points, labels, 3)?;
    let (n, d) = points.shape();
    let means = points.column_means();
    let centered = DMatrix::from_fn(n, d, |r, c| points.get(r, c) - means[c]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().sum();
    if total <= 0.0 {
        return Err(EmbeddingError::DegenerateInput("all points are identical".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Vec::with_capacity(2);
    let mut variances = [0.0; 2];
    for (slot, &idx) in order.iter().take(2).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = (0..v.len())
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(0);
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variances[slot] = eig.eigenvalues[idx].max(0.0);
    }
    // one-dimensional input has a single component
    while components.len() < 2 {
        components.push(vec![0.0; d]);
    }

    let mut projected = Matrix::zeros(n, 2);
    for r in 0..n {
        for (k, comp) in components.iter().enumerate() {
            let dot: f64 = centered.row(r).iter().zip(comp).map(|(a, b)| a * b).sum();
            projected.set(r, k, dot);
        }
    }
    Ok(Embedding2D {
        points: projected,
        labels: labels.to_vec(),
        method: Method::Pca,
        meta: EmbeddingMeta::Pca {
            explained_variance: variances,
            explained_ratio: [variances[0] / total, variances[1] / total],
        },
    })
}

//! Exact O(N^2) t-SNE.
//!
//! Gaussian input affinities with a per-point precision found by bisection on
//! the entropy, symmetrized joint probabilities, Student-t output kernel and
//! momentum gradient descent with early exaggeration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{check_input, Embedding2D, EmbeddingMeta, Method};
use crate::error::EmbeddingError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

const ENTROPY_TOLERANCE: f64 = 1e-5;
const MAX_BISECTIONS: usize = 200;
const MIN_PROB: f64 = 1e-12;

/// Embeds `points` in two dimensions. Deterministic for a given seed.
///
/// When `N < 3 * perplexity` the perplexity is reduced to `floor((N - 1) / 3)`.
pub fn tsne_2d(
    points: &Matrix,
    labels: &[String],
    config: &TsneConfig,
) -> Result<Embedding2D, EmbeddingError> {
    check_input(points, labels, 4)?;
    if !(config.perplexity > 0.0) {
        return Err(EmbeddingError::DegenerateInput("perplexity must be positive".into()));
    }
    let n = points.rows();
    let perplexity = if (n as f64) < 3.0 * config.perplexity {
        ((n - 1) / 3) as f64
    } else {
        config.perplexity
    };

    let dist = squared_distances(points);
    let p = joint_probabilities(&dist, n, perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..2 * n).map(|_| normal.sample(&mut rng)).collect();
    let mut velocity = vec![0.0; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut kl_trace = Vec::with_capacity(config.iterations);

    for iter in 0..config.iterations {
        let exaggerating = iter < config.exaggeration_iterations;
        let exaggeration = if exaggerating { config.early_exaggeration } else { 1.0 };
        let momentum = if exaggerating {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        // Student-t numerators and their sum
        let mut z = 0.0;
        for i in 0..n {
            num[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                z += 2.0 * q;
            }
        }

        let mut kl = 0.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pij = p[i * n + j];
                let qn = num[i * n + j];
                let qij = (qn / z).max(MIN_PROB);
                let mult = (exaggeration * pij - qij) * qn;
                gx += mult * (y[2 * i] - y[2 * j]);
                gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
                kl += pij * (pij / qij).ln();
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }
        kl_trace.push(kl);

        for ((yi, vi), gi) in y.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *vi = momentum * *vi - config.learning_rate * gi;
            *yi += *vi;
        }
        let (mx, my) = (0..n).fold((0.0, 0.0), |(a, b), i| (a + y[2 * i], b + y[2 * i + 1]));
        let (mx, my) = (mx / n as f64, my / n as f64);
        for i in 0..n {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
    }

    Ok(Embedding2D {
        points: Matrix::from_vec(n, 2, y),
        labels: labels.to_vec(),
        method: Method::Tsne,
        meta: EmbeddingMeta::Tsne {
            perplexity,
            iterations: config.iterations,
            seed: config.seed,
            kl_trace,
        },
    })
}

fn squared_distances(points: &Matrix) -> Vec<f64> {
    let n = points.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Conditional affinities `p(j|i)` for row `i` at precision `beta`; returns
/// the Shannon entropy (nats) of the row.
fn conditional_row(dist: &[f64], i: usize, n: usize, beta: f64, row: &mut [f64]) -> f64 {
    let dmin = (0..n)
        .filter(|&j| j != i)
        .map(|j| dist[i * n + j])
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for j in 0..n {
        row[j] = if j == i {
            0.0
        } else {
            (-(dist[i * n + j] - dmin) * beta).exp()
        };
        sum += row[j];
    }
    let mut h = 0.0;
    for (j, v) in row.iter_mut().enumerate() {
        *v /= sum;
        if j != i && *v > 0.0 {
            h -= *v * v.ln();
        }
    }
    h
}

/// Symmetrized joint probabilities `(p(j|i) + p(i|j)) / 2N`.
pub(crate) fn joint_probabilities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        let mut beta = 1.0;
        for _ in 0..MAX_BISECTIONS {
            let h = conditional_row(dist, i, n, beta, &mut row);
            let diff = h - target;
            if diff.abs() < ENTROPY_TOLERANCE {
                break;
            }
            if diff > 0.0 {
                // too flat: sharpen
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        conditional_row(dist, i, n, beta, &mut row);
        cond[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(MIN_PROB);
            }
        }
    }
    p
}

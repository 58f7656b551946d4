#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pianoq::audio::{encode_wav, AudioClip, WavEncoding};
use pianoq::classifier::MicroCnn;
use pianoq::synth::{render_note, SynthConfig};

pub const STEINWAY: usize = 5;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn example_profile_path() -> PathBuf {
    data_dir().join("profile.example.json")
}

/// A model whose output is exactly one-hot on `class` for every input.
pub fn one_hot_model(class: usize) -> MicroCnn {
    let mut m = MicroCnn::zeros();
    m.tensor_mut("fc.bias").unwrap()[class] = 1000.0;
    m
}

/// Synthetic middle C of the given length.
pub fn fixture_clip(duration_s: f64) -> AudioClip {
    let config = SynthConfig {
        duration_s,
        ..SynthConfig::default()
    };
    render_note(STEINWAY, 60, &config).with_source_id("fixture")
}

pub fn fixture_wav_bytes(duration_s: f64) -> Vec<u8> {
    encode_wav(&fixture_clip(duration_s), WavEncoding::Pcm16).unwrap()
}

pub const BOUNDARY: &str = "pianoq-test-boundary";

/// A `multipart/form-data` body with one file part.
pub fn multipart_body(file_name: &str, bytes: &[u8]) -> Vec<u8> {
    let mut body = Vec::new();
    body.extend_from_slice(
        format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\nContent-Type: audio/wav\r\n\r\n"
        )
        .as_bytes(),
    );
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{BOUNDARY}--\r\n").as_bytes());
    body
}

pub fn multipart_content_type() -> String {
    format!("multipart/form-data; boundary={BOUNDARY}")
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Sample covariance of the rows of `points`.
pub fn covariance(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = points[0].len();
    let mean: Vec<f64> = (0..d).map(|c| points.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in points {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    cov
}

/// Fraction of points whose 5 nearest neighbours (excluding themselves) share their label.
pub fn knn_purity(points: &[[f64; 2]], labels: &[String], k: usize) -> f64 {
    let mut agree = 0usize;
    for (i, p) in points.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        agree += d.iter().take(k).filter(|&&(_, j)| labels[j] == labels[i]).count();
    }
    agree as f64 / (points.len() * k) as f64
}

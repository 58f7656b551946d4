//! The micro-CNN: three `3x3` conv / ReLU / `2x2` max-pool stages
//! (1→16→32→64 channels), global average pooling and a 64→7 affine head.
//!
//! All parameters live in one flat `f64` buffer; [`ParamLayout`] names the
//! tensors inside it. Convolutions are lowered to GEMM via im2col.

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::focal::{focal_logit_grad, focal_loss, FocalLossConfig};
use super::ProbabilityVector;
use crate::error::ClassifierError;
use crate::spectral::{ModelInput, MODEL_FRAMES, N_MELS};
use crate::{NUM_CLASSES, PIANO_LABELS};

/// Output channels of the three conv stages.
pub const CONV_CHANNELS: [usize; 3] = [16, 32, 64];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Names, shapes and offsets of every parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    tensors: Vec<(TensorSpec, Range<usize>)>,
    total: usize,
}

impl ParamLayout {
    pub fn micro_cnn() -> Self {
        let mut specs = Vec::new();
        let mut in_c = 1;
        for (i, &out_c) in CONV_CHANNELS.iter().enumerate() {
            specs.push(TensorSpec {
                name: format!("conv{}.weight", i + 1),
                shape: vec![out_c, in_c, 3, 3],
            });
            specs.push(TensorSpec {
                name: format!("conv{}.bias", i + 1),
                shape: vec![out_c],
            });
            in_c = out_c;
        }
        specs.push(TensorSpec {
            name: "fc.weight".into(),
            shape: vec![NUM_CLASSES, in_c],
        });
        specs.push(TensorSpec {
            name: "fc.bias".into(),
            shape: vec![NUM_CLASSES],
        });
        let mut offset = 0;
        let tensors = specs
            .into_iter()
            .map(|s| {
                let r = offset..offset + s.numel();
                offset = r.end;
                (s, r)
            })
            .collect();
        Self {
            tensors,
            total: offset,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn specs(&self) -> impl Iterator<Item = &TensorSpec> {
        self.tensors.iter().map(|(s, _)| s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TensorSpec, Range<usize>)> {
        self.tensors.iter().map(|(s, r)| (s, r.clone()))
    }

    pub fn range(&self, name: &str) -> Option<Range<usize>> {
        self.tensors
            .iter()
            .find(|(s, _)| s.name == name)
            .map(|(_, r)| r.clone())
    }

    fn conv(&self, stage: usize) -> (Range<usize>, Range<usize>) {
        (self.tensors[2 * stage].1.clone(), self.tensors[2 * stage + 1].1.clone())
    }

    fn fc(&self) -> (Range<usize>, Range<usize>) {
        (self.tensors[6].1.clone(), self.tensors[7].1.clone())
    }
}

/// Gradients laid out exactly like [`MicroCnn::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroCnn {
    params: Vec<f64>,
    layout: ParamLayout,
    labels: Arc<[String]>,
    input_shape: (usize, usize),
}

impl MicroCnn {
    /// Randomly initialized model for `128 x 35` inputs and the seven reference labels.
    pub fn new(seed: u64) -> Self {
        Self::with_input_shape((N_MELS, MODEL_FRAMES), seed).expect("default shape is valid")
    }

    /// Model for a different input image size (each side at least 8).
    ///
    /// Weights and biases are drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn with_input_shape(input_shape: (usize, usize), seed: u64) -> Result<Self, ClassifierError> {
        let mut model = Self::zeros_with_shape(input_shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = model.layout.clone();
        let mut fan_in = 1;
        for (spec, range) in layout.iter() {
            if spec.shape.len() > 1 {
                fan_in = spec.shape[1..].iter().product();
            }
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut model.params[range] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    /// All-zero parameters; outputs the uniform distribution.
    pub fn zeros() -> Self {
        Self::zeros_with_shape((N_MELS, MODEL_FRAMES)).expect("default shape is valid")
    }

    fn zeros_with_shape(input_shape: (usize, usize)) -> Result<Self, ClassifierError> {
        if input_shape.0 < 8 || input_shape.1 < 8 {
            return Err(ClassifierError::InvalidConfig(format!(
                "input shape {input_shape:?} is too small for three 2x2 pools"
            )));
        }
        let layout = ParamLayout::micro_cnn();
        Ok(Self {
            params: vec![0.0; layout.total()],
            layout,
            labels: PIANO_LABELS.iter().map(|s| s.to_string()).collect(),
            input_shape,
        })
    }

    /// Rebuilds a model from raw parts (used by checkpoint loading).
    pub fn from_parts(
        params: Vec<f64>,
        labels: Vec<String>,
        input_shape: (usize, usize),
    ) -> Result<Self, ClassifierError> {
        let mut model = Self::zeros_with_shape(input_shape)?;
        if params.len() != model.layout.total() {
            return Err(ClassifierError::Checkpoint(format!(
                "expected {} parameters, found {}",
                model.layout.total(),
                params.len()
            )));
        }
        if labels.len() != NUM_CLASSES {
            return Err(ClassifierError::Checkpoint(format!(
                "expected {NUM_CLASSES} labels, found {}",
                labels.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ClassifierError::NonFinite("checkpoint parameters"));
        }
        model.params = params;
        model.labels = labels.into();
        Ok(model)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn labels(&self) -> &Arc<[String]> {
        &self.labels
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Mutable view of one named tensor.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let r = self.layout.range(name)?;
        Some(&mut self.params[r])
    }

    fn check_shape(&self, input: &ModelInput) -> Result<(), ClassifierError> {
        if input.shape() != self.input_shape {
            return Err(ClassifierError::ShapeMismatch {
                expected: self.input_shape,
                found: input.shape(),
            });
        }
        Ok(())
    }

    /// Logits and softmax probabilities for one image.
    pub fn forward(
        &self,
        input: &ModelInput,
    ) -> Result<([f64; NUM_CLASSES], ProbabilityVector), ClassifierError> {
        self.check_shape(input)?;
        let trace = self.run(input);
        let probs = ProbabilityVector::from_raw(trace.probs, self.labels.clone());
        Ok((trace.logits, probs))
    }

    /// Mean focal loss over `batch` and its exact gradient.
    pub fn loss_gradients(
        &self,
        batch: &[(&ModelInput, usize)],
        config: &FocalLossConfig,
    ) -> Result<(f64, Gradients), ClassifierError> {
        let mut grads = Gradients {
            values: vec![0.0; self.params.len()],
        };
        let loss = self.accumulate_gradients(batch, config, &mut grads.values, |_, _| {})?;
        Ok((loss, grads))
    }

    /// Adds the mean-loss gradient of `batch` into `grad` and returns the mean
    /// loss. `on_sample(index, probs)` sees every forward result.
    pub(crate) fn accumulate_gradients(
        &self,
        batch: &[(&ModelInput, usize)],
        config: &FocalLossConfig,
        grad: &mut [f64],
        mut on_sample: impl FnMut(usize, &[f64; NUM_CLASSES]),
    ) -> Result<f64, ClassifierError> {
        if batch.is_empty() {
            return Err(ClassifierError::EmptyBatch);
        }
        if config.weights.len() != NUM_CLASSES {
            return Err(ClassifierError::InvalidConfig(format!(
                "{} class weights for a {NUM_CLASSES}-class model",
                config.weights.len()
            )));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (i, &(input, label)) in batch.iter().enumerate() {
            self.check_shape(input)?;
            if label >= NUM_CLASSES {
                return Err(ClassifierError::BadLabel(label));
            }
            let trace = self.run(input);
            on_sample(i, &trace.probs);
            loss += focal_loss(&trace.probs, label, config);
            let mut dlogits = [0.0; NUM_CLASSES];
            focal_logit_grad(&trace.probs, label, config, scale, &mut dlogits);
            self.backward(&trace, &dlogits, grad);
        }
        Ok(loss * scale)
    }

    fn run(&self, input: &ModelInput) -> Trace {
        let (mut h, mut w) = self.input_shape;
        let mut act = input.image().as_slice().to_vec();
        let mut in_c = 1;
        let mut stages = Vec::with_capacity(3);
        for (stage, &out_c) in CONV_CHANNELS.iter().enumerate() {
            let (wr, br) = self.layout.conv(stage);
            let cols = im2col(&act, in_c, h, w);
            let hw = h * w;
            let mut out = vec![0.0; out_c * hw];
            for (o, b) in self.params[br].iter().enumerate() {
                out[o * hw..(o + 1) * hw].fill(*b);
            }
            gemm(out_c, in_c * 9, hw, &self.params[wr], false, &cols, false, &mut out, 1.0);
            out.iter_mut().for_each(|v| *v = v.max(0.0));
            let (pooled, argmax, ph, pw) = max_pool(&out, out_c, h, w);
            stages.push(Stage {
                cols,
                relu: out,
                argmax,
                in_c,
                h,
                w,
            });
            act = pooled;
            h = ph;
            w = pw;
            in_c = out_c;
        }
        let area = (h * w) as f64;
        let gap: Vec<f64> = act
            .chunks_exact(h * w)
            .map(|plane| plane.iter().sum::<f64>() / area)
            .collect();
        let (fw, fb) = self.layout.fc();
        let (fw, fb) = (&self.params[fw], &self.params[fb]);
        let mut logits = [0.0; NUM_CLASSES];
        for (k, z) in logits.iter_mut().enumerate() {
            *z = fb[k] + fw[k * in_c..(k + 1) * in_c].iter().zip(&gap).map(|(a, b)| a * b).sum::<f64>();
        }
        let probs = softmax(&logits);
        Trace {
            stages,
            pooled_hw: (h, w),
            gap,
            logits,
            probs,
        }
    }

    fn backward(&self, trace: &Trace, dlogits: &[f64; NUM_CLASSES], grad: &mut [f64]) {
        let channels = trace.gap.len();
        let (fw_r, fb_r) = self.layout.fc();
        let mut dgap = vec![0.0; channels];
        {
            let fw = &self.params[fw_r.clone()];
            for (k, &d) in dlogits.iter().enumerate() {
                grad[fb_r.start + k] += d;
                for c in 0..channels {
                    grad[fw_r.start + k * channels + c] += d * trace.gap[c];
                    dgap[c] += d * fw[k * channels + c];
                }
            }
        }
        let (ph, pw) = trace.pooled_hw;
        let area = (ph * pw) as f64;
        let mut dact: Vec<f64> = dgap
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d / area, ph * pw))
            .collect();

        for (stage_idx, stage) in trace.stages.iter().enumerate().rev() {
            let out_c = CONV_CHANNELS[stage_idx];
            let hw = stage.h * stage.w;
            // unpool, then gate by ReLU
            let mut dout = vec![0.0; out_c * hw];
            for (&src, &d) in stage.argmax.iter().zip(&dact) {
                dout[src] += d;
            }
            for (d, &r) in dout.iter_mut().zip(&stage.relu) {
                if r <= 0.0 {
                    *d = 0.0;
                }
            }
            let (wr, br) = self.layout.conv(stage_idx);
            for o in 0..out_c {
                grad[br.start + o] += dout[o * hw..(o + 1) * hw].iter().sum::<f64>();
            }
            let k = stage.in_c * 9;
            gemm(out_c, hw, k, &dout, false, &stage.cols, true, &mut grad[wr.clone()], 1.0);
            if stage_idx > 0 {
                let mut dcols = vec![0.0; k * hw];
                gemm(k, out_c, hw, &self.params[wr], true, &dout, false, &mut dcols, 0.0);
                dact = col2im(&dcols, stage.in_c, stage.h, stage.w);
            }
        }
    }
}

struct Stage {
    cols: Vec<f64>,
    relu: Vec<f64>,
    argmax: Vec<usize>,
    in_c: usize,
    h: usize,
    w: usize,
}

struct Trace {
    stages: Vec<Stage>,
    pooled_hw: (usize, usize),
    gap: Vec<f64>,
    logits: [f64; NUM_CLASSES],
    probs: [f64; NUM_CLASSES],
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut sum = 0.0;
    for (o, z) in out.iter_mut().zip(logits) {
        *o = (z - m).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

/// `C x H x W` → `(C*9) x (H*W)` patches for a 3x3 kernel with zero padding 1.
fn im2col(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let mut cols = vec![0.0; c * 9 * hw];
    for ch in 0..c {
        let plane = &input[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ch * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let dst = &mut row[y * w..(y + 1) * w];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..w - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..w - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(cols: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let mut out = vec![0.0; c * hw];
    for ch in 0..c {
        let plane = &mut out[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ch * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &row[y * w..(y + 1) * w];
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => dst[..w - 1].iter_mut().zip(&src[1..]).for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += s),
                        _ => dst[1..].iter_mut().zip(&src[..w - 1]).for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
    out
}

/// 2x2 stride-2 max pool (odd trailing row/column dropped). Returns the pooled
/// planes, the flat input index of each maximum, and the pooled size.
fn max_pool(input: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>, usize, usize) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * ph * pw);
    let mut argmax = Vec::with_capacity(c * ph * pw);
    for ch in 0..c {
        let base = ch * h * w;
        for y in 0..ph {
            for x in 0..pw {
                let mut best = base + 2 * y * w + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * w + 2 * x + dx;
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                argmax.push(best);
            }
        }
    }
    (out, argmax, ph, pw)
}

/// `C = op(A) * op(B) + beta * C` on row-major buffers, where `op(A)` is
/// `m x k` and `op(B)` is `k x n`. `ta`/`tb` mean the buffer holds the
/// transpose.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, c: &mut [f64], beta: f64) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserted lengths cover every index reachable with these strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::focal::ClassWeights;
    use crate::matrix::Matrix;
    use rand::Rng;

    fn random_input(h: usize, w: usize, rng: &mut ChaCha8Rng) -> ModelInput {
        ModelInput::new(Matrix::from_vec(
            h,
            w,
            (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect(),
        ))
    }

    fn config(gamma: f64) -> FocalLossConfig {
        FocalLossConfig::new(
            ClassWeights::new(vec![0.1, 0.2, 0.05, 0.15, 0.2, 0.1, 0.2]).unwrap(),
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn parameter_count() {
        let m = MicroCnn::new(0);
        assert_eq!(m.param_count(), 160 + 4640 + 18_496 + 455);
        assert!(m.params().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = MicroCnn::zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, p) = m.forward(&random_input(128, 35, &mut rng)).unwrap();
        for v in p.probs() {
            assert!((v - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_is_checked() {
        let m = MicroCnn::new(0);
        let bad = ModelInput::new(Matrix::zeros(128, 34));
        assert!(matches!(m.forward(&bad), Err(ClassifierError::ShapeMismatch { .. })));
        assert!(MicroCnn::with_input_shape((7, 20), 0).is_err());
    }

    #[test]
    fn im2col_and_col2im_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (c, h, w) = (3, 5, 7);
        let x: Vec<f64> = (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..c * 9 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = im2col(&x, c, h, w).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(col2im(&y, c, h, w)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn conv_matches_direct_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (c, h, w, o) = (2, 4, 6, 3);
        let x: Vec<f64> = (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k: Vec<f64> = (0..o * c * 9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut out = vec![0.0; o * h * w];
        gemm(o, c * 9, h * w, &k, false, &im2col(&x, c, h, w), false, &mut out, 0.0);
        for oc in 0..o {
            for y in 0..h {
                for xx in 0..w {
                    let mut s = 0.0;
                    for ic in 0..c {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let (sy, sx) = (y as isize + ky - 1, xx as isize + kx - 1);
                                if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                                    s += k[((oc * c + ic) * 3 + ky as usize) * 3 + kx as usize]
                                        * x[(ic * h + sy as usize) * w + sx as usize];
                                }
                            }
                        }
                    }
                    assert!((s - out[(oc * h + y) * w + xx]).abs() < 1e-12);
                }
            }
        }
    }

    /// Central-difference check of every parameter on a small image.
    #[test]
    fn gradients_match_finite_differences_for_every_parameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut model = MicroCnn::with_input_shape((10, 9), 4).unwrap();
        for b in ["conv1.bias", "conv2.bias", "conv3.bias", "fc.bias"] {
            for v in model.tensor_mut(b).unwrap() {
                *v = rng.random_range(-0.1..0.1);
            }
        }
        let inputs = [random_input(10, 9, &mut rng), random_input(10, 9, &mut rng)];
        let batch = [(&inputs[0], 2usize), (&inputs[1], 5usize)];
        let cfg = config(2.0);
        let (_, g) = model.loss_gradients(&batch, &cfg).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..model.param_count() {
            let orig = model.params[i];
            model.params[i] = orig + h;
            let lp = model.loss_gradients(&batch, &cfg).unwrap().0;
            model.params[i] = orig - h;
            let lm = model.loss_gradients(&batch, &cfg).unwrap().0;
            model.params[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(g.values[i].abs()).max(1e-6);
            worst = worst.max((fd - g.values[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn saturated_targets_have_flat_gradients() {
        let mut model = MicroCnn::new(3);
        model.tensor_mut("fc.bias").unwrap()[4] = 1000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs = [random_input(128, 35, &mut rng), random_input(128, 35, &mut rng)];
        let batch = [(&inputs[0], 4usize), (&inputs[1], 4usize)];
        let (loss, g) = model.loss_gradients(&batch, &config(2.0)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.norm() < 1e-8);
    }

    #[test]
    fn duplicated_batch_has_the_same_mean_gradient() {
        let model = MicroCnn::new(7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs = [random_input(128, 35, &mut rng), random_input(128, 35, &mut rng)];
        let once = [(&inputs[0], 0usize), (&inputs[1], 6usize)];
        let twice = [once[0], once[1], once[0], once[1]];
        let (_, a) = model.loss_gradients(&once, &config(0.0)).unwrap();
        let (_, b) = model.loss_gradients(&twice, &config(0.0)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        assert!(matches!(
            model.loss_gradients(&[], &config(0.0)),
            Err(ClassifierError::EmptyBatch)
        ));
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let z = [0.1, -2.0, 3.5, 0.0, 1.0, -0.5, 2.2];
        let shifted = z.map(|v| v + 123.456);
        let (a, b) = (softmax(&z), softmax(&shifted));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

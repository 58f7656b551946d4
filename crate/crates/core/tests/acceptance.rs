//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test --test acceptance`.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tower::ServiceExt;

use pianoq::audio::AudioClip;
use pianoq::classifier::{
    checkpoint, compute_alphas, evaluate, focal_loss, train, ClassWeights, DatasetIndex, FocalLossConfig, MicroCnn,
    ProbabilityVector, Split, TrainConfig,
};
use pianoq::embedding::{pca_2d, tsne_2d, EmbeddingMeta, TsneConfig};
use pianoq::erb::{build_filterbank, erb_glasberg90, erb_moore83, erb_representation, DurationMode, ERB_CHANNELS};
use pianoq::matrix::Matrix;
use pianoq::scoring::{expected_score, QualityProfile};
use pianoq::service::{router, ServiceState};
use pianoq::spectral::{ModelInput, MODEL_FRAMES, N_MELS};
use pianoq::survey::{aggregate_survey, correlation_matrix, pearson_corr, SurveyRow, SurveyTable};
use pianoq::synth::{corpus_entries, SynthConfig};
use pianoq::PIANO_LABELS;

type Outcome = Result<String, String>;

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, name: &str, bound: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= bound => (true, d),
            Ok(d) => (false, format!("{d}; over the {}s bound", bound.as_secs_f64())),
            Err(d) => (false, d),
        };
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s, bound {}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            bound.as_secs_f64()
        );
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn main() {
    let mut suite = Suite { failures: 0 };
    suite.run("erb formulas", Duration::from_secs(1), erb_formulas);
    suite.run("erb filterbank", Duration::from_secs(30), erb_filterbank);
    suite.run("focal loss contract", Duration::from_secs(5), focal_contract);
    suite.run("gradient correctness", Duration::from_secs(120), gradient_check);
    suite.run("end-to-end learning", Duration::from_secs(600), end_to_end);
    suite.run("embedding", Duration::from_secs(60), embedding);
    suite.run("survey statistics", Duration::from_secs(1), survey);
    suite.run("scoring", Duration::from_secs(30), scoring);
    if suite.failures > 0 {
        println!("{} criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}

fn erb_formulas() -> Outcome {
    let e = |r: Result<f64, _>| r.map_err(|e: pianoq::error::ErbError| e.to_string());
    ensure(e(erb_moore83(0.0))? == 28.52, "erb_moore83(0) != 28.52")?;
    ensure(e(erb_glasberg90(0.0))? == 24.7, "erb_glasberg90(0) != 24.7")?;
    let g1 = e(erb_glasberg90(1.0))?;
    let g16 = e(erb_glasberg90(16.0))?;
    ensure(rel(g1, 132.639) < 1e-9, format!("erb_glasberg90(1) = {g1}"))?;
    ensure(rel(g16, 1751.724) < 1e-9, format!("erb_glasberg90(16) = {g16}"))?;
    let mut worst: f64 = 0.0;
    for f in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let (m, g) = (e(erb_moore83(f))?, e(erb_glasberg90(f))?);
        worst = worst.max(rel(m, g));
    }
    ensure(worst < 0.15, format!("approximations differ by {:.1}%", worst * 100.0))?;
    Ok(format!("anchors exact, max quadratic/linear gap {:.2}%", worst * 100.0))
}

fn erb_filterbank() -> Outcome {
    let bank = build_filterbank(44_100).map_err(|e| e.to_string())?;
    ensure(bank.channels() == ERB_CHANNELS, format!("{} channels", bank.channels()))?;
    let last = bank.center_freqs_hz[ERB_CHANNELS - 1];
    ensure(rel(last, 16_000.0) < 1e-6, format!("last center {last}"))?;
    for (c, b) in bank.center_freqs_hz.iter().zip(&bank.bandwidths_hz) {
        let want = erb_glasberg90(c / 1000.0).map_err(|e| e.to_string())?;
        ensure(rel(*b, want) < 1e-12, format!("bandwidth {b} at {c} Hz, expected {want}"))?;
    }

    let frames = 8000;
    let sigma: f64 = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let normal = Normal::new(0.0, sigma).unwrap();
    let samples: Vec<f64> = (0..frames * bank.frame_samples)
        .map(|_| normal.sample(&mut rng).clamp(-1.0f64, 1.0))
        .collect();
    let clip = AudioClip::new(samples, 44_100, "noise").map_err(|e| e.to_string())?;
    let rep = erb_representation(&clip, &bank, DurationMode::Full).map_err(|e| e.to_string())?;
    ensure(rep.band_power.rows() == frames, "frame count")?;
    // expected power per FFT bin of Hann-windowed white noise, per Hz of band
    let n = bank.frame_samples as f64;
    let w2: f64 = (0..bank.frame_samples)
        .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n).cos()).powi(2))
        .sum();
    let per_hz = sigma * sigma * w2 / (44_100.0 / n);
    let worst = rep
        .time_mean
        .iter()
        .zip(&bank.bandwidths_hz)
        .map(|(p, b)| rel(*p, per_hz * b))
        .fold(0.0, f64::max);
    ensure(worst < 0.10, format!("white-noise band power deviates {:.1}% from bandwidth", worst * 100.0))?;
    Ok(format!(
        "77 channels, last center {last} Hz, noise power tracks bandwidth within {:.2}% over {frames} frames",
        worst * 100.0
    ))
}

fn focal_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let alpha: f64 = rng.random_range(0.0..1.0);
        let p: f64 = rng.random_range(1e-9..1.0);
        let cfg = FocalLossConfig::new(ClassWeights::new(vec![alpha, 1.0 - alpha]).unwrap(), 0.0).unwrap();
        let got = focal_loss(&[p, 1.0 - p], 0, &cfg);
        ensure(got == -alpha * p.ln(), format!("gamma 0 at alpha {alpha}, p {p}: {got}"))?;
    }
    let half = FocalLossConfig::new(ClassWeights::new(vec![0.5, 0.5]).unwrap(), 0.0).unwrap();
    let a = focal_loss(&[0.5, 0.5], 0, &half);
    ensure((a - 0.34657).abs() < 1e-5, format!("weighted CE worked value {a}"))?;
    let one = FocalLossConfig::new(ClassWeights::new(vec![1.0, 0.0]).unwrap(), 2.0).unwrap();
    let b = focal_loss(&[0.9, 0.1], 0, &one);
    ensure((b - 0.0010536).abs() < 1e-7, format!("gamma 2 worked value {b}"))?;

    let alphas = compute_alphas(&[73, 338, 336, 198, 131, 134, 232]).map_err(|e| e.to_string())?;
    // (1/s_i) / sum_j (1/s_j), evaluated as exact fractions
    let oracle = [
        0.310_693_288_909_759_34,
        0.067_102_396_717_196_55,
        0.067_501_815_745_275_1,
        0.114_548_535_810_163_8,
        0.173_134_428_171_087_26,
        0.169_258_284_256_809_2,
        0.097_761_250_389_708_76,
    ];
    for (i, (a, o)) in alphas.alphas().iter().zip(oracle).enumerate() {
        ensure((a - o).abs() < 5e-5, format!("alpha[{i}] = {a}, oracle {o}"))?;
    }
    let sum: f64 = alphas.alphas().iter().sum();
    ensure((sum - 1.0).abs() < 1e-12, format!("alphas sum to {sum}"))?;
    Ok("1000 gamma-0 pairs exact, worked values and table alphas match".into())
}

fn random_input(rng: &mut ChaCha8Rng) -> ModelInput {
    let data = (0..N_MELS * MODEL_FRAMES).map(|_| rng.random_range(0.0..1.0)).collect();
    ModelInput::new(Matrix::from_vec(N_MELS, MODEL_FRAMES, data))
}

fn mean_loss(model: &MicroCnn, batch: &[(&ModelInput, usize)], cfg: &FocalLossConfig) -> f64 {
    batch
        .iter()
        .map(|(x, y)| focal_loss(model.forward(x).unwrap().1.probs(), *y, cfg))
        .sum::<f64>()
        / batch.len() as f64
}

fn central_difference(
    model: &mut MicroCnn,
    i: usize,
    h: f64,
    batch: &[(&ModelInput, usize)],
    cfg: &FocalLossConfig,
) -> f64 {
    let orig = model.params()[i];
    model.params_mut()[i] = orig + h;
    let up = mean_loss(model, batch, cfg);
    model.params_mut()[i] = orig - h;
    let down = mean_loss(model, batch, cfg);
    model.params_mut()[i] = orig;
    (up - down) / (2.0 * h)
}

fn relative_error(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6)
}

fn gradient_check() -> Outcome {
    let h = 1e-5;
    let cfg = FocalLossConfig::new(compute_alphas(&[73, 338, 336, 198, 131, 134, 232]).unwrap(), 2.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut retested = 0;
    for point in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + point);
        let mut model = MicroCnn::new(point);
        let inputs = [random_input(&mut rng), random_input(&mut rng)];
        let batch: Vec<(&ModelInput, usize)> = inputs.iter().map(|x| (x, rng.random_range(0..7))).collect();
        let (_, grads) = model.loss_gradients(&batch, &cfg).map_err(|e| e.to_string())?;

        // every bias, plus 96 seeded entries of each weight tensor
        let mut indices = Vec::new();
        for (spec, range) in model.layout().clone().iter() {
            if spec.name.ends_with("bias") {
                indices.extend(range);
            } else {
                indices.extend((0..96).map(|_| rng.random_range(range.clone())));
            }
        }
        for i in indices {
            let an = grads.values[i];
            let mut err = relative_error(central_difference(&mut model, i, h, &batch, &cfg), an);
            if err >= 1e-4 {
                // a ReLU or max-pool switch inside [-h, h] makes the h estimate meaningless
                retested += 1;
                for step in [h / 10.0, h / 100.0] {
                    err = relative_error(central_difference(&mut model, i, step, &batch, &cfg), an);
                    if err < 1e-4 {
                        break;
                    }
                }
            }
            worst = worst.max(err);
            checked += 1;
        }
    }
    let detail = format!(
        "{checked} parameters over 5 points, max relative error {worst:.2e}, {retested} retested at smaller steps"
    );
    ensure(worst < 1e-4, detail.clone())?;
    Ok(detail)
}

fn acceptance_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 60,
        learning_rate: 0.25,
        ..TrainConfig::default()
    }
}

fn end_to_end() -> Outcome {
    let entries = corpus_entries(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let total = entries.len();
    let index = DatasetIndex::new(entries, 0).map_err(|e| e.to_string())?;
    let (model, history) = train(&index, &acceptance_train_config()).map_err(|e| e.to_string())?;
    let m = evaluate(&model, &index, Split::Test).map_err(|e| e.to_string())?;
    let detail = format!(
        "{total} slices, test accuracy {:.4}, weighted F1 {:.4}, best epoch {}",
        m.accuracy, m.weighted_f1, history.best_epoch
    );
    ensure(m.accuracy >= 0.95, detail.clone())?;
    ensure((m.accuracy - m.weighted_f1).abs() <= 0.005, detail.clone())?;
    Ok(detail)
}

fn embedding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..77).map(|c| rng.random_range(-1.0..1.0) * (1.0 + c as f64 / 10.0)).collect())
        .collect();
    let points = Matrix::from_rows(&rows);
    let labels: Vec<String> = (0..50).map(|i| format!("p{i}")).collect();
    let pca = pca_2d(&points, &labels).map_err(|e| e.to_string())?;
    let oracle = common::jacobi_eigenvalues(common::covariance(&rows));
    let EmbeddingMeta::Pca { explained_variance, .. } = pca.meta else {
        return Err("PCA returned non-PCA metadata".into());
    };
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let col: Vec<f64> = pca.points.iter_rows().map(|r| r[k]).collect();
        let mean = col.iter().sum::<f64>() / 50.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 49.0;
        worst = worst.max(rel(var, oracle[k])).max(rel(explained_variance[k], oracle[k]));
    }
    ensure(worst < 1e-8, format!("PCA variances off by {worst:.3e} relative"))?;
    ensure(pca == pca_2d(&points, &labels).unwrap(), "PCA not deterministic")?;

    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut cluster_rows = Vec::new();
    let mut cluster_labels = Vec::new();
    let offset = 10.0 / 2f64.sqrt();
    for k in 0..3 {
        for _ in 0..30 {
            let mut r: Vec<f64> = (0..77).map(|_| normal.sample(&mut rng)).collect();
            r[k] += offset;
            cluster_rows.push(r);
            cluster_labels.push(format!("c{k}"));
        }
    }
    let clusters = Matrix::from_rows(&cluster_rows);
    let cfg = TsneConfig::with_seed(11);
    let a = tsne_2d(&clusters, &cluster_labels, &cfg).map_err(|e| e.to_string())?;
    let b = tsne_2d(&clusters, &cluster_labels, &cfg).map_err(|e| e.to_string())?;
    ensure(a.points == b.points, "t-SNE not deterministic")?;
    let xy: Vec<[f64; 2]> = a.points.iter_rows().map(|r| [r[0], r[1]]).collect();
    let purity = common::knn_purity(&xy, &cluster_labels, 5);
    ensure(purity >= 0.9, format!("t-SNE 5-NN purity {purity:.3}"))?;
    Ok(format!(
        "PCA variances within {worst:.1e} of Jacobi, t-SNE 5-NN purity {purity:.3}, both repeatable"
    ))
}

fn survey() -> Outcome {
    let x = [1.0, 2.0, 3.0];
    let fixtures = [([1.0, 2.0, 3.0], 1.0), ([3.0, 2.0, 1.0], -1.0), ([6.0, 4.0, 5.0], -0.5)];
    for (y, want) in fixtures {
        let r = pearson_corr(&x, &y).map_err(|e| e.to_string())?;
        ensure((r - want).abs() < 1e-12, format!("pearson {y:?} = {r}, expected {want}"))?;
    }

    let table = SurveyTable::load(common::data_dir().join("ratings.example.csv")).map_err(|e| e.to_string())?;
    let m = correlation_matrix(&table).map_err(|e| e.to_string())?;
    for i in 0..4 {
        ensure(m.get(i, i) == 1.0, format!("diagonal {i} = {}", m.get(i, i)))?;
        for j in 0..4 {
            ensure(m.get(i, j) == m.get(j, i), "correlation matrix not symmetric")?;
        }
    }

    let summary = aggregate_survey(&table).map_err(|e| e.to_string())?;
    ensure(summary.participant_count == 30, "participant count")?;
    let mean_of = |piano: &str| summary.means.iter().find(|p| p.piano == piano).map(|p| p.overall);
    let steinway = mean_of("Steinway").ok_or("no Steinway row")?;
    let pearl = mean_of("PearlRiver").ok_or("no PearlRiver row")?;
    ensure(steinway == 118.0 / 30.0, format!("Steinway mean {steinway}"))?;
    ensure(pearl == 2.4, format!("PearlRiver mean {pearl}"))?;

    let row = |p: &str, r: [u8; 4]| SurveyRow {
        participant: p.into(),
        piano: "X".into(),
        low: r[0],
        middle: r[1],
        high: r[2],
        overall: r[3],
    };
    let two = SurveyTable::new(vec![row("a", [1, 2, 3, 2]), row("b", [3, 2, 5, 4])]).map_err(|e| e.to_string())?;
    let two_mean = aggregate_survey(&two).map_err(|e| e.to_string())?.means[0].overall;
    ensure(two_mean == 3.0, format!("two-participant mean {two_mean}"))?;
    Ok(format!(
        "pearson fixtures exact, matrix symmetric with unit diagonal, Steinway {steinway:.2}, PearlRiver {pearl}, two-participant 3.0"
    ))
}

fn scoring() -> Outcome {
    let profile = QualityProfile::load(common::example_profile_path()).map_err(|e| e.to_string())?;
    let labels: Arc<[String]> = PIANO_LABELS.iter().map(|s| s.to_string()).collect();
    let mut onehot = [0.0; 7];
    onehot[common::STEINWAY] = 1.0;
    let e = expected_score(&ProbabilityVector::new(onehot, labels.clone()).unwrap(), &profile)
        .map_err(|e| e.to_string())?;
    ensure(e == 3.93, format!("one-hot Steinway scores {e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let (lo, hi) = (profile.min_q(), profile.max_q());
    for _ in 0..10_000 {
        let raw: [f64; 7] = std::array::from_fn(|_| -rng.random_range(1e-12f64..1.0).ln());
        let total: f64 = raw.iter().sum();
        let p = ProbabilityVector::new(raw.map(|v| v / total), labels.clone()).map_err(|e| e.to_string())?;
        let s = expected_score(&p, &profile).map_err(|e| e.to_string())?;
        ensure(lo <= s && s <= hi, format!("score {s} outside [{lo}, {hi}]"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profile_path = common::example_profile_path();
    let runtime = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (tag, model) in [("onehot", common::one_hot_model(common::STEINWAY)), ("random", MicroCnn::new(7))] {
        let model_path = dir.path().join(format!("{tag}.pqm"));
        checkpoint::save(&model, &model_path).map_err(|e| e.to_string())?;
        let app = router(ServiceState::with_model(model, profile.clone()), false);
        for secs in [0.5, 3.0] {
            let wav = common::fixture_wav_bytes(secs);
            let wav_path = dir.path().join(format!("fixture_{secs}.wav"));
            std::fs::write(&wav_path, &wav).map_err(|e| e.to_string())?;
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let args = [
                "pianoq".as_ref(),
                "score".as_ref(),
                model_path.as_os_str(),
                wav_path.as_os_str(),
                "--profile".as_ref(),
                profile_path.as_os_str(),
            ];
            let code = pianoq::cli::run_with(args, &mut out, &mut err);
            ensure(code == 0, format!("cli score exited {code}: {}", String::from_utf8_lossy(&err)))?;
            let request = Request::post("/api/score")
                .header(header::CONTENT_TYPE, common::multipart_content_type())
                .body(Body::from(common::multipart_body("fixture.wav", &wav)))
                .unwrap();
            let (status, body) = runtime.block_on(async {
                let resp = app.clone().oneshot(request).await.unwrap();
                let status = resp.status();
                (status, resp.into_body().collect().await.unwrap().to_bytes())
            });
            ensure(status == StatusCode::OK, format!("http status {status}"))?;
            ensure(
                out.trim_ascii() == body.trim_ascii(),
                format!(
                    "cli and http differ for {tag}/{secs}s:\n{}\n{}",
                    String::from_utf8_lossy(&out),
                    String::from_utf8_lossy(&body)
                ),
            )?;
            if tag == "onehot" {
                let v: serde_json::Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
                ensure(v["expected_score"] == 3.93, format!("one-hot response {v}"))?;
            }
            compared += 1;
        }
    }
    Ok(format!(
        "one-hot Steinway 3.93, 10000 random vectors within [{lo}, {hi}], {compared} cli/http pairs byte-identical"
    ))
}

//! The `pianoq` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input or file format,
//! 3 numeric failure. Failures print one `error:` line on stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::audio::{self, WavEncoding};
use crate::classifier::{checkpoint, evaluate, train, DatasetIndex, Split, TrainConfig};
use crate::embedding::{pca_2d, tsne_2d, TsneConfig};
use crate::erb::{self, DurationMode, ErbRepresentation, ERB_CHANNELS};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::pipeline;
use crate::scoring::QualityProfile;
use crate::service::{self, ServeConfig};
use crate::spectral::MelAnalyzer;
use crate::survey::{aggregate_survey, correlation_matrix, SurveySummary, SurveyTable, RATING_COLUMNS};
use crate::WORKING_RATE_HZ;

#[derive(Debug, Parser)]
#[command(name = "pianoq", version, about = "Piano sound-quality evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut a recording into 0.2 s slices (slice_000.wav, ...).
    Slice {
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the mel spectrogram as CSV (frames x bands) or PGM.
    Melspec {
        wav: PathBuf,
        /// Output file; `.pgm` writes an image, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// ERB representations of a directory of notes plus per-brand averages.
    Erb {
        dir: PathBuf,
        #[arg(long, default_value = "full")]
        duration: DurationMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-dimensional embedding of the rows of a feature CSV.
    Embed {
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = EmbedMethod::Pca)]
        method: EmbedMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the classifier on a `path,label,source_id` manifest.
    Train {
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch history CSV; defaults to `<out>.history.csv`.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Slice-level metrics of a model over every recording in a manifest.
    Eval {
        model: PathBuf,
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one recording; prints the score response as JSON.
    Score {
        model: PathBuf,
        wav: PathBuf,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Survey means and register correlations.
    Survey {
        ratings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP scoring service.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, env = "PIANOQ_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Allow cross-origin requests from any origin (local UI development).
        #[arg(long)]
        dev_cors: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedMethod {
    Pca,
    Tsne,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Error> {
    match command {
        Command::Slice { wav, out: dir } => {
            let clip = audio::load_wav(&wav)?;
            let set = audio::slice_default(&clip);
            std::fs::create_dir_all(&dir)?;
            for (i, s) in set.slices.iter().enumerate() {
                audio::write_wav(dir.join(format!("slice_{i:03}.wav")), s, WavEncoding::Float32)?;
            }
            writeln!(out, "{} slices written to {}", set.len(), dir.display())?;
        }
        Command::Melspec { wav, out: path } => {
            let clip = audio::resample(&audio::load_wav(&wav)?, WORKING_RATE_HZ)?;
            let mel = MelAnalyzer::new(WORKING_RATE_HZ)?.analyze(&clip)?;
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
                std::fs::write(&path, mel.to_pgm())?;
            } else {
                mel.write_csv(std::fs::File::create(&path)?)?;
            }
            writeln!(out, "{} frames x {} bands written to {}", mel.frames(), mel.n_mels, path.display())?;
        }
        Command::Erb { dir, duration, out: path } => {
            let n = write_erb_csv(&dir, duration, &path)?;
            writeln!(out, "{n} notes written to {}", path.display())?;
        }
        Command::Embed {
            csv,
            method,
            seed,
            perplexity,
            out: path,
        } => {
            let (points, labels) = read_feature_csv(&csv)?;
            let emb = match method {
                EmbedMethod::Pca => pca_2d(&points, &labels)?,
                EmbedMethod::Tsne => tsne_2d(
                    &points,
                    &labels,
                    &TsneConfig {
                        perplexity,
                        ..TsneConfig::with_seed(seed)
                    },
                )?,
            };
            emb.write_csv(std::fs::File::create(&path)?)?;
            writeln!(out, "{} points written to {}", labels.len(), path.display())?;
        }
        Command::Train {
            manifest,
            gamma,
            seed,
            epochs,
            learning_rate,
            batch_size,
            out: path,
            history,
        } => {
            let rows = pipeline::read_manifest(&manifest)?;
            let index = DatasetIndex::new(pipeline::manifest_entries(&rows)?, seed)?;
            let config = TrainConfig {
                epochs,
                batch_size,
                learning_rate,
                gamma,
                seed,
                ..TrainConfig::default()
            };
            let (model, hist) = train(&index, &config)?;
            checkpoint::save(&model, &path)?;
            let history_path = history.unwrap_or_else(|| {
                let mut p = path.clone().into_os_string();
                p.push(".history.csv");
                p.into()
            });
            hist.write_csv(std::fs::File::create(&history_path)?)?;
            let best = &hist.epochs[hist.best_epoch - 1];
            writeln!(
                out,
                "model {} saved to {} (epoch {}, val accuracy {:.4})",
                checkpoint::model_id(&model),
                path.display(),
                best.epoch,
                best.val_accuracy
            )?;
        }
        Command::Eval { model, manifest, out: path } => {
            let model = checkpoint::load(&model)?;
            let rows = pipeline::read_manifest(&manifest)?;
            let index = DatasetIndex::all_in(pipeline::manifest_entries(&rows)?, Split::Test)?;
            let metrics = evaluate(&model, &index, Split::Test)?;
            std::fs::write(&path, serde_json::to_string_pretty(&metrics)?)?;
            writeln!(
                out,
                "accuracy {:.4}, weighted F1 {:.4}",
                metrics.accuracy, metrics.weighted_f1
            )?;
        }
        Command::Score { model, wav, profile } => {
            let model = checkpoint::load(&model)?;
            let profile = QualityProfile::load(&profile)?;
            let clip = audio::load_wav(&wav)?;
            let response = pipeline::score_clip(&model, &profile, &clip)?;
            writeln!(out, "{}", pipeline::to_json(&response))?;
        }
        Command::Survey { ratings, out: path } => {
            let table = SurveyTable::load(&ratings)?;
            let stats = survey_stats(&table)?;
            std::fs::write(&path, serde_json::to_string_pretty(&stats)?)?;
            writeln!(
                out,
                "{} participants, {} pianos written to {}",
                stats.summary.participant_count,
                stats.summary.means.len(),
                path.display()
            )?;
        }
        Command::Serve {
            model,
            profile,
            port,
            host,
            dev_cors,
        } => {
            let config = ServeConfig {
                model_path: model,
                profile: QualityProfile::load(&profile)?,
                addr: SocketAddr::new(host, port),
                dev_cors,
            };
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?
                .block_on(service::serve(config))?;
        }
    }
    Ok(())
}

/// `survey` output document.
#[derive(Debug, Serialize)]
pub struct SurveyStats {
    #[serde(flatten)]
    pub summary: SurveySummary,
    pub correlation: Option<CorrelationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CorrelationBlock {
    pub labels: [&'static str; 4],
    pub matrix: Vec<Vec<f64>>,
}

pub fn survey_stats(table: &SurveyTable) -> Result<SurveyStats, Error> {
    let summary = aggregate_survey(table)?;
    let (correlation, correlation_error) = match correlation_matrix(table) {
        Ok(m) => (
            Some(CorrelationBlock {
                labels: RATING_COLUMNS,
                matrix: m.iter_rows().map(<[f64]>::to_vec).collect(),
            }),
            None,
        ),
        // fewer than two pianos, or a constant column
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SurveyStats {
        summary,
        correlation,
        correlation_error,
    })
}

/// Brand and key number from a note's path.
///
/// `<dir>/<Brand>/<key>.wav` uses the subdirectory as brand; otherwise the
/// stem is `<Brand>_<key>` or `<Brand>_m<midi>` (key = midi - 20).
pub fn parse_note_path(root: &Path, path: &Path) -> Option<(String, u32)> {
    let stem = path.file_stem()?.to_str()?;
    let parent = path.parent()?;
    let (brand, tail) = if parent != root {
        (parent.file_name()?.to_str()?.to_string(), stem.rsplit('_').next()?)
    } else {
        let (b, t) = stem.rsplit_once('_')?;
        (b.to_string(), t)
    };
    let key = match tail.strip_prefix('m') {
        Some(midi) => midi.parse::<u32>().ok()?.checked_sub(20)?,
        None => tail.parse().ok()?,
    };
    Some((brand, key))
}

fn note_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    let read = |d: &Path| {
        std::fs::read_dir(d).map_err(|e| Error::Input(format!("cannot read {}: {e}", d.display())))
    };
    for entry in read(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            for sub in read(&p)? {
                files.push(sub?.path());
            }
        } else {
            files.push(p);
        }
    }
    files.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")));
    files.sort();
    Ok(files)
}

/// Writes `kind,brand,pitch,register,erb_00..erb_76` rows: one `note` row per
/// file, then one `brand` row per brand with the average over its pitches.
pub fn write_erb_csv(dir: &Path, duration: DurationMode, out: &Path) -> Result<usize, Error> {
    let bank = erb::build_filterbank(WORKING_RATE_HZ)?;
    let mut by_brand: BTreeMap<String, BTreeMap<u32, ErbRepresentation>> = BTreeMap::new();
    for path in note_files(dir)? {
        let (brand, key) = parse_note_path(dir, &path).ok_or_else(|| {
            Error::Input(format!(
                "cannot read brand and key from {}; expected <Brand>_<key>.wav, <Brand>_m<midi>.wav or <Brand>/<key>.wav",
                path.display()
            ))
        })?;
        let clip = audio::resample(&audio::load_wav(&path)?, WORKING_RATE_HZ)?;
        let rep = erb::erb_representation(&clip, &bank, duration)?;
        by_brand.entry(brand).or_default().insert(key, rep);
    }
    if by_brand.is_empty() {
        return Err(Error::Input(format!("no .wav files under {}", dir.display())));
    }
    let mut w = csv::Writer::from_path(out)?;
    let mut header = vec!["kind".to_string(), "brand".into(), "pitch".into(), "register".into()];
    header.extend((0..ERB_CHANNELS).map(|i| format!("erb_{i:02}")));
    w.write_record(&header)?;
    let mut notes = 0;
    for (brand, reps) in &by_brand {
        for (key, rep) in reps {
            let mut rec = vec![
                "note".to_string(),
                brand.clone(),
                key.to_string(),
                erb::register_of_pitch(*key).to_string(),
            ];
            rec.extend(rep.time_mean.iter().map(f64::to_string));
            w.write_record(&rec)?;
            notes += 1;
        }
    }
    for (brand, reps) in &by_brand {
        let summary = erb::summarize_brand(reps, brand)?;
        let mut rec = vec!["brand".to_string(), brand.clone(), String::new(), String::new()];
        rec.extend(summary.brand_average.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(notes)
}

/// Reads a feature CSV for `embed`.
///
/// The label comes from a `label` column, else `brand`. Columns named
/// `kind`, `pitch`, `register` and `source_id` are ignored, and so are rows
/// whose `kind` is not `note`. Every other column must be numeric.
pub fn read_feature_csv(path: &Path) -> Result<(Matrix, Vec<String>), Error> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let label_col = find("label").or_else(|| find("brand"));
    let kind_col = find("kind");
    let skip = ["label", "brand", "kind", "pitch", "register", "source_id"];
    let features: Vec<usize> = (0..header.len())
        .filter(|&i| !skip.contains(&&header[i]))
        .collect();
    if features.is_empty() {
        return Err(Error::Input(format!("{} has no feature columns", path.display())));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if kind_col.is_some_and(|k| &rec[k] != "note") {
            continue;
        }
        let row = features
            .iter()
            .map(|&i| {
                rec[i].trim().parse::<f64>().map_err(|_| {
                    Error::Input(format!(
                        "{} row {}: column `{}` is not a number",
                        path.display(),
                        line + 2,
                        &header[i]
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
        labels.push(label_col.map(|c| rec[c].to_string()).unwrap_or_default());
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{} has no data rows", path.display())));
    }
    Ok((Matrix::from_rows(&rows), labels))
}

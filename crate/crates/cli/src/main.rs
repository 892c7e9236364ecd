//! `risbeam` — dataset generation, training, evaluation, timing, and
//! robustness runs for RIS codeword prediction.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use risbeam_core::dataset::{generate_dataset_with, Dataset, DatasetMeta};
use risbeam_core::eval::{
    benchmark_timing, export_report, robustness_study, run_power_sweep, scheme_cost,
    score_on_dataset, ReportFormat, Scheme,
};
use risbeam_core::neural::{load_model, save_model, train, HeadKind, LossKind, ModelParams};
use risbeam_core::pilots::FeatureMode;
use risbeam_core::profile::Profile;
use risbeam_core::ris::ReferenceKind;

#[derive(Parser)]
#[command(
    name = "risbeam",
    about = "RIS-assisted mmWave MIMO: simulate, search codebooks, train and evaluate the codeword predictor",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProfileArgs {
    /// Built-in profile name (`desk` or `full`).
    #[arg(long, default_value = "desk", conflicts_with = "config")]
    profile: String,
    /// Profile JSON file (overrides --profile).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; overrides the profile's system seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<Profile> {
        let mut profile = match &self.config {
            Some(path) => Profile::from_json(
                &std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?,
            )?,
            None => Profile::by_name(&self.profile)
                .ok_or_else(|| anyhow!("unknown profile '{}'", self.profile))?,
        };
        if let Some(seed) = self.seed {
            profile.system.seed = seed;
            profile.train.seed = seed;
        }
        Ok(profile)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset (plus a codebook audit export).
    Gen {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Output directory for the dataset files.
        #[arg(long)]
        out: PathBuf,
        /// Sample count; defaults to the profile's budget.
        #[arg(long)]
        samples: Option<usize>,
        /// Label power in dBm; defaults to the profile's value.
        #[arg(long)]
        label_power_dbm: Option<f64>,
        /// Uplink pilot power in dBm; defaults to the label power.
        #[arg(long)]
        pilot_power_dbm: Option<f64>,
        /// Feature mode: `kron-even` or `raw`.
        #[arg(long)]
        mode: Option<String>,
        /// Reference RIS state: `zero` or `random`.
        #[arg(long)]
        reference: Option<String>,
        /// Build labels against the ideal (unit-amplitude) codebook.
        #[arg(long)]
        ideal_codebook: bool,
        /// Skip the per-codeword rate file.
        #[arg(long)]
        no_rates: bool,
    },
    /// Train the codeword predictor on a generated dataset.
    Train {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Dataset directory from `gen`.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for model files.
        #[arg(long)]
        out: PathBuf,
        /// Single-label softmax training instead of multi-label.
        #[arg(long)]
        single_label: bool,
        /// Positive-term-only loss variant (ablation).
        #[arg(long)]
        literal_loss: bool,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Power-sweep evaluation of ES / AO / LSTM / random.
    Eval {
        #[command(flatten)]
        profile: ProfileArgs,
        /// Model directory from `train`; omit for baseline-only sweeps.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Report path; `.csv` or `.json` decides the format.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Comma-separated power list in dBm, e.g. `20,30,40,50,60`.
        #[arg(long)]
        powers: Option<String>,
        /// Comma-separated scheme subset of `es,ao,lstm,random`.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Pin the uplink pilot power instead of following the sweep.
        #[arg(long)]
        pilot_power_dbm: Option<f64>,
        /// Also score the model on a dataset's held-out test split.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Median per-realization wall-clock for each scheme.
    Bench {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Normalized SE under +-perturbation of propagation parameters.
    Robust {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0.2)]
        perturb: f64,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

/// Training provenance stored next to the model so later commands can
/// rebuild the exact feature pipeline.
#[derive(Serialize, Deserialize)]
struct TrainingRecord {
    dataset_meta: DatasetMeta,
    loss: LossKind,
    threshold: f64,
}

fn parse_mode(text: &str) -> Result<FeatureMode> {
    match text {
        "kron-even" => Ok(FeatureMode::KronEven),
        "raw" => Ok(FeatureMode::Raw),
        other => bail!("unknown feature mode '{other}' (expected kron-even or raw)"),
    }
}

fn parse_reference(text: &str) -> Result<ReferenceKind> {
    match text {
        "zero" => Ok(ReferenceKind::ZeroPhase),
        "random" => Ok(ReferenceKind::SeededRandom),
        other => bail!("unknown reference state '{other}' (expected zero or random)"),
    }
}

fn parse_powers(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad power value '{s}'"))
        })
        .collect()
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    text.split(',')
        .map(|s| Scheme::parse(s.trim()).ok_or_else(|| anyhow!("unknown scheme '{s}'")))
        .collect()
}

fn report_format(path: &Path) -> ReportFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => ReportFormat::Csv,
        _ => ReportFormat::Json,
    }
}

fn load_training_record(model_dir: &Path) -> Result<TrainingRecord> {
    let path = model_dir.join("training.json");
    Ok(serde_json::from_str(&std::fs::read_to_string(&path).with_context(
        || format!("reading {} (is this a `risbeam train` output?)", path.display()),
    )?)?)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            profile,
            out,
            samples,
            label_power_dbm,
            pilot_power_dbm,
            mode,
            reference,
            ideal_codebook,
            no_rates,
        } => {
            let profile = profile.resolve()?;
            let mode = mode.as_deref().map(parse_mode).transpose()?.unwrap_or(profile.feature_mode);
            let reference = reference
                .as_deref()
                .map(parse_reference)
                .transpose()?
                .unwrap_or(profile.reference);
            let label_p = label_power_dbm.unwrap_or(profile.label_power_dbm);
            let pilot_p = pilot_power_dbm.unwrap_or(label_p);
            let count = samples.unwrap_or(profile.samples);

            let mut dataset = generate_dataset_with(
                &profile.system,
                count,
                label_p,
                pilot_p,
                reference,
                mode,
                ideal_codebook,
            )?;
            if no_rates {
                dataset = dataset.without_rates();
            }
            dataset.save(&out)?;
            let codebook = risbeam_core::codebook::build_codebook(&profile.system, ideal_codebook)?;
            codebook.export(&out.join("codebook"))?;
            println!(
                "wrote {} samples (K={}, D={}, Q={}) to {}",
                count,
                dataset.meta.steps,
                dataset.meta.feature_dim,
                dataset.meta.outputs,
                out.display()
            );
        }
        Command::Train {
            profile,
            data,
            out,
            single_label,
            literal_loss,
            epochs,
            batch,
            lr,
            patience,
            threshold,
        } => {
            if single_label && literal_loss {
                bail!("--single-label and --literal-loss are mutually exclusive");
            }
            let profile = profile.resolve()?;
            let dataset = Dataset::load(&data)?;
            let (train_view, val_view, test_view) = dataset.split((0.8, 0.1, 0.1))?;

            let mut tcfg = profile.train.clone();
            if let Some(v) = epochs {
                tcfg.max_epochs = v;
            }
            if let Some(v) = batch {
                tcfg.batch_size = v;
            }
            if let Some(v) = lr {
                tcfg.learning_rate = v;
            }
            if let Some(v) = patience {
                tcfg.patience = v;
            }
            if let Some(v) = threshold {
                tcfg.sigmoid_threshold = v;
            }
            tcfg.loss = if single_label {
                LossKind::SingleLabelSoftmax
            } else if literal_loss {
                LossKind::MultiLabelBcePositiveOnly
            } else {
                LossKind::MultiLabelBce
            };

            let mut dims = profile.model_dims();
            dims.input = dataset.meta.feature_dim;
            dims.outputs = dataset.meta.outputs;
            let head = if single_label {
                HeadKind::Softmax
            } else {
                HeadKind::Sigmoid
            };
            let params = ModelParams::init(dims, head, tcfg.seed);

            let (trained, history) =
                train(&train_view.batch_source(), &val_view.batch_source(), params, &tcfg)?;
            save_model(&trained, &out)?;
            std::fs::write(
                out.join("history.json"),
                serde_json::to_string_pretty(&history)?,
            )?;
            std::fs::write(
                out.join("training.json"),
                serde_json::to_string_pretty(&TrainingRecord {
                    dataset_meta: dataset.meta.clone(),
                    loss: tcfg.loss,
                    threshold: tcfg.sigmoid_threshold,
                })?,
            )?;
            let score = score_on_dataset(&trained, &test_view, tcfg.sigmoid_threshold)?;
            println!(
                "trained {} epochs; test normalized SE {:.2}% (random expectation {:.2}%), exact match {:.2}%",
                history.len(),
                score.norm_se_pct,
                score.random_norm_se_pct,
                score.exact_match_pct
            );
        }
        Command::Eval {
            profile,
            model,
            out,
            trials,
            powers,
            schemes,
            threshold,
            pilot_power_dbm,
            data,
        } => {
            let (params, record) = match &model {
                Some(dir) => {
                    let record = load_training_record(dir)?;
                    (Some(load_model(dir)?), Some(record))
                }
                None => (None, None),
            };
            // the training record pins the exact system the model saw
            let profile = match &record {
                Some(r) => {
                    let mut p = profile.resolve()?;
                    p.system = r.dataset_meta.system.clone();
                    p.feature_mode = r.dataset_meta.feature_mode;
                    p
                }
                None => profile.resolve()?,
            };
            let powers = match powers {
                Some(text) => parse_powers(&text)?,
                None => profile.system.powers_dbm.clone(),
            };
            let schemes = match schemes {
                Some(text) => parse_schemes(&text)?,
                None => {
                    if params.is_some() {
                        Scheme::all()
                    } else {
                        vec![Scheme::Es, Scheme::Ao, Scheme::Random]
                    }
                }
            };
            let threshold = threshold
                .or(record.as_ref().map(|r| r.threshold))
                .unwrap_or(0.5);

            let report = run_power_sweep(
                params.as_ref(),
                &profile.system,
                profile.feature_mode,
                &schemes,
                trials,
                &powers,
                pilot_power_dbm,
                threshold,
                profile.system.seed,
            )?;
            export_report(&report, &out, report_format(&out))?;
            for row in &report.rows {
                println!(
                    "P={:>5.1} dBm {:>6}: mean {:.3} bit/s/Hz ({:.1}% of ES)",
                    row.power_dbm, row.scheme, row.mean_se, row.norm_se_pct
                );
            }
            if let (Some(params), Some(dir)) = (params.as_ref(), data) {
                let dataset = Dataset::load(&dir)?;
                let (_, _, test_view) = dataset.split((0.8, 0.1, 0.1))?;
                let score = score_on_dataset(params, &test_view, threshold)?;
                println!(
                    "held-out test: normalized SE {:.2}% (random {:.2}%), label hit {:.2}%",
                    score.norm_se_pct, score.random_norm_se_pct, score.label_hit_pct
                );
            }
            println!("report written to {}", out.display());
        }
        Command::Bench {
            profile,
            model,
            out,
            trials,
        } => {
            let record = load_training_record(&model)?;
            let params = load_model(&model)?;
            let mut profile = profile.resolve()?;
            profile.system = record.dataset_meta.system.clone();
            profile.feature_mode = record.dataset_meta.feature_mode;

            let timing = benchmark_timing(
                &params,
                &profile.system,
                profile.feature_mode,
                trials,
                profile.system.seed,
            )?;
            #[derive(Serialize)]
            struct BenchOut<'a> {
                timing: &'a risbeam_core::eval::TimingReport,
                analytic: Vec<(String, risbeam_core::eval::CostEstimate)>,
            }
            let analytic = Scheme::all()
                .into_iter()
                .map(|s| {
                    (
                        s.as_str().to_string(),
                        scheme_cost(s, &profile.system, Some(&params.dims)),
                    )
                })
                .collect();
            std::fs::write(
                &out,
                serde_json::to_string_pretty(&BenchOut {
                    timing: &timing,
                    analytic,
                })?,
            )?;
            for (name, ms) in &timing.ms_median {
                println!("{name:>6}: median {ms:.4} ms per realization");
            }
            println!("written to {}", out.display());
        }
        Command::Robust {
            profile,
            model,
            out,
            trials,
            perturb,
            threshold,
        } => {
            let record = load_training_record(&model)?;
            let params = load_model(&model)?;
            let mut profile = profile.resolve()?;
            profile.system = record.dataset_meta.system.clone();
            profile.feature_mode = record.dataset_meta.feature_mode;
            let threshold = threshold.unwrap_or(record.threshold);

            let report = robustness_study(
                &params,
                &profile.system,
                profile.feature_mode,
                record.dataset_meta.label_power_dbm,
                perturb,
                trials,
                threshold,
                profile.system.seed,
            )?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            println!(
                "unperturbed {:.2}%, worst case {:.2}%",
                report.unperturbed_norm_se_pct, report.worst_norm_se_pct
            );
            for r in &report.results {
                println!("  {} x{:.2}: {:.2}%", r.parameter, r.factor, r.norm_se_pct);
            }
            println!("written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

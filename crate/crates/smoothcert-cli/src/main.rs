//! Command-line front end: train pipelines, certify and predict over
//! datasets, run PGD pre-perturbation attacks, and turn reports into
//! accuracy curves and comparisons.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use smoothcert::core::{CertifyConfig, NoiseFamily};
use smoothcert::harness::{
    attack_dataset, build_datasets, certified_accuracy, certify_dataset, compare_reports,
    emit_compare_csv, emit_curve_csv, load_dataset_csv, load_experiment_config, predict_dataset,
    read_csv, save_dataset_csv, train_pipeline, write_csv, CertificationReport, Pipeline, Split,
};
use smoothcert::net::{load_classifier, load_generator, save_classifier, save_generator};

#[derive(Parser)]
#[command(name = "smoothcert", version, about = "Certified robustness via randomized smoothing with per-dimension noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Laplace,
}

impl From<FamilyArg> for NoiseFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => NoiseFamily::Gaussian,
            FamilyArg::Laplace => NoiseFamily::Laplace,
        }
    }
}

/// Flags shared by `certify` and `predict`.
#[derive(Args)]
struct SmoothingArgs {
    /// Classifier checkpoint (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Noise generator checkpoint, or "none" for the isotropic fallback.
    #[arg(long, default_value = "none")]
    noisegen: String,
    /// Dataset CSV (columns x_0..x_{d-1},label).
    #[arg(long)]
    dataset: PathBuf,
    /// Noise family.
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    /// Isotropic scale used when no generator is given.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Certification confidence level alpha.
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Seed for all Monte Carlo streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SmoothingArgs {
    fn pipeline(&self) -> anyhow::Result<Pipeline> {
        let classifier = load_classifier(&self.model)
            .with_context(|| format!("loading classifier {}", self.model.display()))?;
        let generator = if self.noisegen == "none" {
            None
        } else {
            Some(
                load_generator(Path::new(&self.noisegen))
                    .with_context(|| format!("loading generator {}", self.noisegen))?,
            )
        };
        if !(self.sigma > 0.0) {
            bail!("--sigma must be positive");
        }
        Ok(Pipeline {
            classifier,
            generator,
            family: self.family.into(),
            iso_sigma: self.sigma,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify every example of a dataset and write a CSV report.
    Certify {
        #[command(flatten)]
        smoothing: SmoothingArgs,
        /// Selection samples.
        #[arg(long, default_value_t = 100)]
        n0: u64,
        /// Estimation samples.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Samples per work unit.
        #[arg(long, default_value_t = 1024)]
        batch_size: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Skip the wall_time_s column (reports become byte-reproducible).
        #[arg(long)]
        no_timing: bool,
    },
    /// Predict with abstention on every example of a dataset.
    Predict {
        #[command(flatten)]
        smoothing: SmoothingArgs,
        /// Monte Carlo samples.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a pipeline from an experiment config.
    Train {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Path for the classifier checkpoint.
        #[arg(long)]
        out_model: PathBuf,
        /// Path for the generator checkpoint (anisotropic mode only).
        #[arg(long)]
        out_noisegen: Option<PathBuf>,
    },
    /// PGD-perturb a dataset against a classifier.
    Attack {
        /// Classifier checkpoint (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV to perturb.
        #[arg(long)]
        dataset: PathBuf,
        /// Max l-infinity perturbation.
        #[arg(long)]
        eps_inf: f64,
        /// PGD iterations.
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Step size per iteration.
        #[arg(long)]
        step: f64,
        /// Clip box as "lo,hi".
        #[arg(long, default_value = "-8,8")]
        clip: String,
        /// Output dataset CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the certified-accuracy curve of a report.
    Report {
        /// Report CSV produced by `certify`.
        #[arg(long)]
        report: PathBuf,
        /// Largest grid radius.
        #[arg(long, default_value_t = 4.0)]
        grid_max: f64,
        /// Grid step.
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-radius accuracy deltas between two reports.
    Compare {
        /// Baseline report CSV.
        #[arg(long)]
        baseline: PathBuf,
        /// Candidate report CSV.
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_clip(raw: &str) -> anyhow::Result<(f64, f64)> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        bail!("--clip expects \"lo,hi\", got {raw:?}");
    }
    let lo: f64 = parts[0].trim().parse().context("bad clip low bound")?;
    let hi: f64 = parts[1].trim().parse().context("bad clip high bound")?;
    if lo > hi {
        bail!("clip interval is empty: {lo} > {hi}");
    }
    Ok((lo, hi))
}

fn grid(max: f64, step: f64) -> anyhow::Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) {
        bail!("grid needs max >= 0 and step > 0");
    }
    let mut out = Vec::new();
    let mut r = 0.0;
    while r <= max + 1e-12 {
        out.push(r);
        r += step;
    }
    Ok(out)
}

fn report_from_rows(path: &Path) -> anyhow::Result<CertificationReport> {
    let rows = read_csv(path).with_context(|| format!("reading {}", path.display()))?;
    let report = CertificationReport {
        rows,
        config: serde_json::Value::Null,
        seed: 0,
        norm: None,
    };
    report.validate()?;
    Ok(report)
}

fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Certify {
            smoothing,
            n0,
            n,
            batch_size,
            out,
            no_timing,
        } => {
            let pipeline = smoothing.pipeline()?;
            let dataset = load_dataset_csv(&smoothing.dataset, Split::Test)?;
            let cfg = CertifyConfig {
                n0,
                n,
                confidence_alpha: smoothing.alpha,
                batch_size,
                seed: smoothing.seed,
            };
            let snapshot = serde_json::json!({
                "command": "certify",
                "model": smoothing.model.display().to_string(),
                "noisegen": smoothing.noisegen,
                "dataset": smoothing.dataset.display().to_string(),
                "sigma": smoothing.sigma,
                "n0": n0, "n": n, "alpha": smoothing.alpha,
                "seed": smoothing.seed, "workers": smoothing.workers,
            });
            let report = certify_dataset(
                &pipeline,
                &dataset,
                &cfg,
                smoothing.seed,
                smoothing.workers,
                !no_timing,
                snapshot,
            )?;
            write_csv(&report, &out)?;
            let certified = report.rows.iter().filter(|r| r.certified).count();
            let correct = report
                .rows
                .iter()
                .filter(|r| r.certified && r.certified_label == Some(r.true_label))
                .count();
            println!(
                "certified {certified}/{} examples ({correct} correct); report at {}",
                report.rows.len(),
                out.display()
            );
        }
        Command::Predict { smoothing, n, out } => {
            let pipeline = smoothing.pipeline()?;
            let dataset = load_dataset_csv(&smoothing.dataset, Split::Test)?;
            let rows = predict_dataset(
                &pipeline,
                &dataset,
                n,
                smoothing.alpha,
                smoothing.seed,
                smoothing.workers,
            )?;
            let mut csv = String::from("example_id,true_label,status,predicted_label\n");
            for (id, truth, predicted) in &rows {
                match predicted {
                    Some(p) => csv.push_str(&format!("{id},{truth},PREDICTED,{p}\n")),
                    None => csv.push_str(&format!("{id},{truth},ABSTAIN,\n")),
                }
            }
            emit(out.as_deref(), &csv)?;
        }
        Command::Train {
            config,
            out_model,
            out_noisegen,
        } => {
            let cfg = load_experiment_config(&config)?;
            let (train_set, _) = build_datasets(&cfg)?;
            let (pipeline, trace) = train_pipeline(&cfg, &train_set)?;
            save_classifier(&pipeline.classifier, cfg.seed, &out_model)?;
            if let Some(g) = &pipeline.generator {
                let path = out_noisegen
                    .context("anisotropic config trained a generator: pass --out-noisegen")?;
                save_generator(g, cfg.seed, &path)?;
            }
            println!(
                "trained {} epochs; final mean loss {:.6}",
                trace.len(),
                trace.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Attack {
            model,
            dataset,
            eps_inf,
            iters,
            step,
            clip,
            out,
        } => {
            let classifier = load_classifier(&model)?;
            let data = load_dataset_csv(&dataset, Split::Test)?;
            let (clip_lo, clip_hi) = parse_clip(&clip)?;
            let attacked = attack_dataset(
                &classifier,
                &data,
                &smoothcert::harness::AttackConfig {
                    eps_inf,
                    iters,
                    step,
                    clip_lo,
                    clip_hi,
                },
            )?;
            save_dataset_csv(&attacked, &out)?;
            println!("wrote perturbed dataset to {}", out.display());
        }
        Command::Report {
            report,
            grid_max,
            grid_step,
            out,
        } => {
            let parsed = report_from_rows(&report)?;
            let curve = certified_accuracy(&parsed, &grid(grid_max, grid_step)?)?;
            emit(out.as_deref(), &emit_curve_csv(&curve))?;
        }
        Command::Compare {
            baseline,
            candidate,
            grid_max,
            grid_step,
            out,
        } => {
            let base = report_from_rows(&baseline)?;
            let cand = report_from_rows(&candidate)?;
            let deltas = compare_reports(&base, &cand, &grid(grid_max, grid_step)?)?;
            emit(out.as_deref(), &emit_compare_csv(&deltas))?;
        }
    }
    Ok(())
}

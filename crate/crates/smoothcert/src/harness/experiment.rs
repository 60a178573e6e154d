//! Experiment orchestration: build or load a dataset, train the pipeline,
//! optionally pre-perturb the test set, certify every test example, and
//! write the report artifacts. End-to-end deterministic per seed.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{certify_with_workers, CertifyDetails};
use crate::core::{rng_stream, CertifyConfig, NoiseFamily, NoiseSpec, RngStream, Vector};
use crate::error::{Error, Result};
use crate::harness::dataset::{load_dataset_csv, make_blobs, Dataset, Split};
use crate::harness::report::{
    certified_accuracy, default_radius_grid, emit_curve_csv, write_csv, CertificationReport,
    ReportRow,
};
use crate::net::{
    pgd_attack, save_classifier, save_generator, train, GeneratorBounds, Mlp, NoiseGenNet,
    TrainConfig,
};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Isotropic baseline (fixed sigma, zero mean) or the trained anisotropic
/// pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingMode {
    Isotropic,
    Anisotropic,
}

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetConfig {
    Blobs {
        num_classes: usize,
        points_per_class_train: usize,
        points_per_class_test: usize,
        dim: usize,
        class_separation: f64,
        noise_std: f64,
    },
    Csv {
        train_path: String,
        test_path: String,
    },
}

/// Trunk shape and head bounds of the noise generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub bounds: GeneratorBounds,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            bounds: GeneratorBounds::default(),
        }
    }
}

/// Training hyperparameters (seed and family come from the experiment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSection {
    pub loss_weights: crate::net::LossWeights,
    pub sigma_target: f64,
    pub samples_per_input: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
}

/// Monte Carlo certification parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifySection {
    pub n0: u64,
    pub n: u64,
    pub alpha: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: u64,
}

fn default_batch_size() -> u64 {
    1024
}

/// PGD pre-perturbation applied to the test set before certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub eps_inf: f64,
    pub iters: usize,
    pub step: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

/// Full experiment description; the JSON file the CLI consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub mode: SmoothingMode,
    pub family: NoiseFamily,
    pub dataset: DatasetConfig,
    pub classifier_hidden: Vec<usize>,
    #[serde(default)]
    pub generator: GeneratorConfig,
    pub train: TrainSection,
    pub certify: CertifySection,
    #[serde(default)]
    pub attack: Option<AttackConfig>,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub record_timing: bool,
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::ConfigError(format!(
                "unsupported config schema_version {}",
                self.schema_version
            )));
        }
        self.certify_config().validate()?;
        self.generator.bounds.validate()?;
        if self.workers == 0 {
            return Err(Error::ConfigError("workers must be positive".into()));
        }
        if let Some(a) = &self.attack {
            if !(a.eps_inf >= 0.0) || !(a.step >= 0.0) || a.clip_lo > a.clip_hi {
                return Err(Error::ConfigError("invalid attack parameters".into()));
            }
        }
        if let DatasetConfig::Blobs {
            num_classes,
            points_per_class_train,
            points_per_class_test,
            dim,
            class_separation,
            noise_std,
        } = &self.dataset
        {
            if *num_classes < 2
                || *points_per_class_train == 0
                || *points_per_class_test == 0
                || *dim == 0
                || !(*class_separation > 0.0)
                || !(*noise_std > 0.0)
            {
                return Err(Error::ConfigError("invalid blobs parameters".into()));
            }
        }
        Ok(())
    }

    pub fn certify_config(&self) -> CertifyConfig {
        CertifyConfig {
            n0: self.certify.n0,
            n: self.certify.n,
            confidence_alpha: self.certify.alpha,
            batch_size: self.certify.batch_size,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss_weights: self.train.loss_weights,
            sigma_target: self.train.sigma_target,
            samples_per_input: self.train.samples_per_input,
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            batch: self.train.batch,
            seed: self.seed,
            family: self.family,
        }
    }
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let raw = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&raw)?;
    cfg.validate()?;
    Ok(cfg)
}

/// A trained smoothing pipeline: the base classifier plus either a noise
/// generator or a fixed isotropic scale.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub classifier: Mlp,
    pub generator: Option<NoiseGenNet>,
    pub family: NoiseFamily,
    /// Scale used when no generator is present.
    pub iso_sigma: f64,
}

impl Pipeline {
    /// The noise spec certification will freeze for this input.
    pub fn noise_spec_for(&self, x: &Vector) -> Result<NoiseSpec> {
        match &self.generator {
            Some(g) => g.noise_spec(x, self.family),
            None => match self.family {
                NoiseFamily::Gaussian => NoiseSpec::isotropic_gaussian(x.dim(), self.iso_sigma),
                NoiseFamily::Laplace => NoiseSpec::isotropic_laplace(x.dim(), self.iso_sigma),
            },
        }
    }
}

/// Everything a finished experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub pipeline: Pipeline,
    pub train_trace: Vec<f64>,
    pub test_set: Dataset,
    /// Report on the clean test set.
    pub report: CertificationReport,
    /// Report on the PGD-perturbed test set, when an attack was configured.
    pub attacked_report: Option<CertificationReport>,
}

/// Tags separating the experiment's independent random streams.
const INIT_CLASSIFIER_TAG: u64 = 1;
const INIT_GENERATOR_TAG: u64 = 2;
const CERTIFY_TAG: u64 = 3;
/// Blobs test split derives its seed from the train seed with this offset.
const TEST_SEED_OFFSET: u64 = 0x1E57;

/// Materializes the train/test splits a config describes.
pub fn build_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    match &cfg.dataset {
        DatasetConfig::Blobs {
            num_classes,
            points_per_class_train,
            points_per_class_test,
            dim,
            class_separation,
            noise_std,
        } => {
            let mut train_set = make_blobs(
                *num_classes,
                *points_per_class_train,
                *dim,
                *class_separation,
                *noise_std,
                cfg.seed,
            )?;
            train_set.split = Split::Train;
            let mut test_set = make_blobs(
                *num_classes,
                *points_per_class_test,
                *dim,
                *class_separation,
                *noise_std,
                cfg.seed.wrapping_add(TEST_SEED_OFFSET),
            )?;
            test_set.split = Split::Test;
            Ok((train_set, test_set))
        }
        DatasetConfig::Csv {
            train_path,
            test_path,
        } => Ok((
            load_dataset_csv(Path::new(train_path), Split::Train)?,
            load_dataset_csv(Path::new(test_path), Split::Test)?,
        )),
    }
}

/// Trains the configured pipeline on the train split.
pub fn train_pipeline(cfg: &ExperimentConfig, train_set: &Dataset) -> Result<(Pipeline, Vec<f64>)> {
    let mut dims = vec![train_set.dim()];
    dims.extend_from_slice(&cfg.classifier_hidden);
    dims.push(train_set.num_classes());
    let mut classifier = Mlp::new(&dims, &mut rng_stream(cfg.seed, INIT_CLASSIFIER_TAG))?;

    let train_cfg = cfg.train_config();
    let pairs = train_set.pairs();
    let (generator, trace) = match cfg.mode {
        SmoothingMode::Isotropic => {
            let trace = train(&mut classifier, None, &pairs, &train_cfg)?;
            (None, trace)
        }
        SmoothingMode::Anisotropic => {
            let mut g = NoiseGenNet::new(
                train_set.dim(),
                &cfg.generator.hidden,
                cfg.generator.bounds,
                train_cfg.sigma_target,
                &mut rng_stream(cfg.seed, INIT_GENERATOR_TAG),
            )?;
            let trace = train(&mut classifier, Some(&mut g), &pairs, &train_cfg)?;
            (Some(g), trace)
        }
    };
    Ok((
        Pipeline {
            classifier,
            generator,
            family: cfg.family,
            iso_sigma: cfg.train.sigma_target,
        },
        trace,
    ))
}

/// Certifies every example of a dataset under the pipeline's per-input
/// noise specs. Examples are distributed across `workers`; row order and
/// content are independent of the worker count.
pub fn certify_dataset(
    pipeline: &Pipeline,
    dataset: &Dataset,
    certify_cfg: &CertifyConfig,
    seed: u64,
    workers: usize,
    record_timing: bool,
    config_snapshot: serde_json::Value,
) -> Result<CertificationReport> {
    certify_cfg.validate()?;
    let workers = workers.max(1);
    let n = dataset.len();
    let root = rng_stream(seed, CERTIFY_TAG);

    let certify_one = |i: usize| -> Result<ReportRow> {
        let x = dataset.input(i);
        let spec = pipeline.noise_spec_for(x)?;
        let stream: RngStream = root.substream(i as u64);
        let started = record_timing.then(Instant::now);
        let details: CertifyDetails =
            certify_with_workers(&pipeline.classifier, x, &spec, certify_cfg, stream, 1)?;
        let wall = started.map(|t| t.elapsed().as_secs_f64());
        Ok(ReportRow::from_outcome(
            i as u64,
            dataset.label(i).index(),
            &details.outcome,
            wall,
        ))
    };

    let mut rows: Vec<Option<ReportRow>> = vec![None; n];
    if workers == 1 {
        for (i, slot) in rows.iter_mut().enumerate() {
            *slot = Some(certify_one(i)?);
        }
    } else {
        let chunk = n.div_ceil(workers);
        let results: Vec<Result<Vec<(usize, ReportRow)>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let certify_one = &certify_one;
                    scope.spawn(move || {
                        let lo = w * chunk;
                        let hi = ((w + 1) * chunk).min(n);
                        let mut out = Vec::with_capacity(hi.saturating_sub(lo));
                        for i in lo..hi {
                            out.push((i, certify_one(i)?));
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("certification worker panicked"))
                .collect()
        });
        for result in results {
            for (i, row) in result? {
                rows[i] = Some(row);
            }
        }
    }

    let report = CertificationReport {
        rows: rows.into_iter().map(|r| r.expect("row filled")).collect(),
        config: config_snapshot,
        seed,
        norm: None,
    };
    report.validate()?;
    Ok(report)
}

/// Substream tag for PREDICT runs, disjoint from certification.
const PREDICT_TAG: u64 = 4;

/// Runs PREDICT on every example; returns `(example_id, true_label,
/// predicted_label)` with `None` for abstentions. Deterministic per seed
/// and independent of `workers`.
pub fn predict_dataset(
    pipeline: &Pipeline,
    dataset: &Dataset,
    n: u64,
    alpha: f64,
    seed: u64,
    workers: usize,
) -> Result<Vec<(u64, usize, Option<usize>)>> {
    let root = rng_stream(seed, PREDICT_TAG);
    let n_examples = dataset.len();
    let predict_one = |i: usize| -> Result<(u64, usize, Option<usize>)> {
        let x = dataset.input(i);
        let spec = pipeline.noise_spec_for(x)?;
        let outcome = crate::certify::predict(
            &pipeline.classifier,
            x,
            &spec,
            n,
            alpha,
            root.substream(i as u64),
        )?;
        let predicted = match outcome {
            crate::certify::PredictOutcome::Predicted(l) => Some(l.index()),
            crate::certify::PredictOutcome::Abstain => None,
        };
        Ok((i as u64, dataset.label(i).index(), predicted))
    };

    let workers = workers.max(1);
    if workers == 1 {
        return (0..n_examples).map(predict_one).collect();
    }
    let chunk = n_examples.div_ceil(workers);
    let results: Vec<Result<Vec<(u64, usize, Option<usize>)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let predict_one = &predict_one;
                scope.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n_examples);
                    (lo..hi).map(predict_one).collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("prediction worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(n_examples);
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Applies the configured PGD attack to every test input.
pub fn attack_dataset(
    classifier: &Mlp,
    dataset: &Dataset,
    attack: &AttackConfig,
) -> Result<Dataset> {
    let mut adv = Vec::with_capacity(dataset.len());
    for (x, y) in dataset.iter() {
        adv.push(pgd_attack(
            classifier,
            x,
            y,
            attack.eps_inf,
            attack.iters,
            attack.step,
            (attack.clip_lo, attack.clip_hi),
        )?);
    }
    dataset.with_inputs(adv, format!("{}-pgd", dataset.name))
}

/// Runs the full experiment. When `out_dir` is given, writes
/// `report.csv` / `report.json` (and attacked variants), the accuracy
/// curve, and model checkpoints there.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let snapshot = serde_json::to_value(cfg)?;
    let (train_set, test_set) = build_datasets(cfg)?;
    let (pipeline, train_trace) = train_pipeline(cfg, &train_set)?;

    let certify_cfg = cfg.certify_config();
    let report = certify_dataset(
        &pipeline,
        &test_set,
        &certify_cfg,
        cfg.seed,
        cfg.workers,
        cfg.record_timing,
        snapshot.clone(),
    )?;

    let attacked_report = match &cfg.attack {
        Some(attack) => {
            let attacked = attack_dataset(&pipeline.classifier, &test_set, attack)?;
            Some(certify_dataset(
                &pipeline,
                &attacked,
                &certify_cfg,
                cfg.seed,
                cfg.workers,
                cfg.record_timing,
                snapshot.clone(),
            )?)
        }
        None => None,
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_csv(&report, &dir.join("report.csv"))?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
        let curve = certified_accuracy(&report, &default_radius_grid())?;
        std::fs::write(dir.join("curve.csv"), emit_curve_csv(&curve))?;
        if let Some(attacked) = &attacked_report {
            write_csv(attacked, &dir.join("report_attacked.csv"))?;
            let curve = certified_accuracy(attacked, &default_radius_grid())?;
            std::fs::write(dir.join("curve_attacked.csv"), emit_curve_csv(&curve))?;
        }
        save_classifier(&pipeline.classifier, cfg.seed, &dir.join("model.json"))?;
        if let Some(g) = &pipeline.generator {
            save_generator(g, cfg.seed, &dir.join("noisegen.json"))?;
        }
    }

    Ok(ExperimentOutput {
        pipeline,
        train_trace,
        test_set,
        report,
        attacked_report,
    })
}

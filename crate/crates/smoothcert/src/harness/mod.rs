//! Synthetic datasets, experiment orchestration, the certified-accuracy
//! metric, and report emission.

mod dataset;
mod experiment;
mod report;

pub use dataset::{
    load_dataset_csv, make_blobs, save_dataset_csv, simplex_centers, Dataset, Split,
};
pub use experiment::{
    attack_dataset, build_datasets, certify_dataset, load_experiment_config, predict_dataset,
    run_experiment, train_pipeline, AttackConfig, CertifySection, DatasetConfig,
    ExperimentConfig, ExperimentOutput, GeneratorConfig, Pipeline, SmoothingMode, TrainSection,
    CONFIG_SCHEMA_VERSION,
};
pub use report::{
    certified_accuracy, compare_reports, default_radius_grid, emit_compare_csv, emit_csv,
    emit_curve_csv, parse_csv, read_csv, write_csv, AccuracyDelta, CertificationReport,
    ReportRow, REPORT_HEADER, STATUS_ABSTAIN, STATUS_CERTIFIED,
};

//! Experiment orchestration: JSON configs with grid axes, seed fan-out,
//! report and CSV artifacts, run comparison and the two diagnostic studies.
//!
//! A config is one JSON document. Any array on a scalar field is a grid
//! axis; fields that are lists by type (`seeds`, `ks`, `hidden`, ...) become
//! axes only when they hold arrays of lists.

mod compare;
mod config;
mod run;
mod studies;

pub use compare::{collect_reports, compare_reports, compare_runs, Comparison, ComparisonRow, Winner};
pub use config::{
    aux_seed, expand_grid, grid_axes, read_config, Axis, Cell, DatasetSource, ExperimentConfig, ItlmParams, Loaded,
    TrainerKind,
};
pub use run::{
    generate_data, is_generated, metric_rows, override_seed, plot_rows, run_experiment, split_metric, train_run,
    train_with, with_workers, write_csv, write_run, ExperimentOutput, Prepared, RunRecord,
};
pub use studies::{
    diagnose_disagreement, rating_plot_rows, rating_study, write_json, DisagreementRun, DisagreementStudy, RatingRun,
};

//! Experiment runner: seeded sweeps over the scenario parameters, scheme
//! comparison and CSV output.

mod config;
mod experiment;
mod output;

pub use config::{db_to_linear, parse_config, parse_settings, read_settings, ExperimentConfig, ExperimentKind, Settings};
pub use experiment::{
    contour_grid, default_out_path, run_and_write, run_experiment, run_trial, sweep_points, ContourGrid, RunOutput,
    SweepPoint,
};
pub use output::{emit_csv, read_csv, sidecar_path, summarize, write_csv, Summary, TrialRecord, HEADER};

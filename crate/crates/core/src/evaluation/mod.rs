//! Error metrics, the persistence baseline, prediction files and the
//! config-driven experiment grid.

mod config;
mod experiment;
mod metrics;

pub use config::{DataConfig, ExperimentConfig, GridConfig, OutputConfig, SplitConfig};
pub use experiment::{
    cell_seed, load_series, output_files, run_experiment, split_cutoff, CellFailure, CellRecord,
    DataSummary, ExperimentOutcome, WindowSummary,
};
pub use metrics::{baseline_persistence, emit_predictions, mae, mape, mse, rmse, MetricsReport};

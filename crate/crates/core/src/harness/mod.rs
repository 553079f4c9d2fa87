//! Experiment drivers, table writers and file formats behind the CLI.

pub mod config;
pub mod experiments;
pub mod io;

pub use config::{DdConfig, ExperimentConfig};
pub use experiments::{
    compute_err_metrics, run_dt_sweep, run_tests_set1, run_trend_series, singular_value_table, DriftRow, ErrRecord,
    TrendMode, TrendSeries,
};
pub use io::{dump_state, export_field_image, load_state};

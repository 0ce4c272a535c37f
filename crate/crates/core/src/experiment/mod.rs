//! Experiment grids over methods, metric heads, label budgets and seeds.

mod config;
mod grid;
mod report;
mod results;

pub use config::{Cell, ExperimentConfig, KEYS};
pub use grid::{
    execute_grid, export_run, load_dataset, paired_differences, run_grid, run_once, summary_json, GridOutcome,
    PairedDifference,
};
pub use report::report_table;
pub use results::{read_results_csv, write_results_csv, ExperimentResult, RunFailure, CSV_HEADER};

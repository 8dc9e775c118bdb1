//! End-to-end runs: configuration, dataset preparation, seeded single runs,
//! sweeps, the correction ablation and the `α`/`β` sensitivity grid.
//!
//! Per-seed rows are written as JSON lines, aggregates and plot-ready curves
//! as CSV.

pub mod config;
pub mod prepare;
pub mod report;
pub mod run;

pub use config::{
    DatasetSource, ExperimentConfig, SchemaSource, SyntheticPreset, CACHE_DIR_ENV, DEFAULT_SEEDS,
    OUT_DIR_ENV,
};
pub use prepare::{content_hash, load_table, PreparedData, SplitData};
pub use report::{aggregate, mean_std, AggregateRow, CurvePoint, ExperimentReport, ReportRow};
pub use run::{
    ablate_correction, run_cell, run_cells, run_single, run_sweep, sensitivity, sweep_cells,
    try_run_cell, AblationReport, Cell, PairedDelta, SENSITIVITY_GRID,
};

//! Experiment harness for mode-targeted QAOA: seeded sweeps over qubit count,
//! depth and noise, JSONL records, aggregate CSVs and plot-ready tables.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{BenchError, Result};
pub use harness::{run_cells, run_experiment, CellOutput, ExperimentOutput, Record, SweepPoint};
pub use report::{aggregate, emit_plot_data, AggregateRow};

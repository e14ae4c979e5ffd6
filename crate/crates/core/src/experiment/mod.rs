//! ε sweeps over methods and seeds, and the files they emit.

mod config;
mod report;
mod sweep;

pub use config::{ExperimentConfig, DEFAULT_EPSILONS, SYNTH_SOURCE};
pub use report::{emit_report, format_float, summarize, GroupSummary, Summary, RESULTS_COLUMNS};
pub use sweep::{run_cell, run_sweep, run_sweep_on, sweep_cells, CellAudit, SweepCell, SweepResults, SweepRow};

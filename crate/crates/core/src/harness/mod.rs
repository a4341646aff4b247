//! Experiment harness: planner by budget by seed grids over a task suite,
//! ablations, judge-noise restoration, efficiency curves and reports.

mod efficiency;
mod report;
mod restoration;
mod run;
mod spec;

pub use efficiency::{compute_efficiency, CurvePoint, Segment};
pub use report::{
    aggregate, efficiency_series, emit_report, load_rows, median, rows_from_csv, rows_to_csv,
    Aggregate, EfficiencySeries, ReportFormat, Row, RunReport, CSV_COLUMNS,
};
pub use restoration::{run_restoration, RestorationReport, RestorationRow};
pub use run::{
    cell_config, cell_seed, grid, planning_registry, run_cell, run_experiment, run_tasks, Cell,
};
pub use spec::{ablation_variants, Ablation, ExperimentSpec, NoiseSpec, Planner, Variant};

use crate::sim::SimError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("need at least two curve points, got {0}")]
    InsufficientPoints(usize),
    #[error("suite: {0}")]
    Suite(#[from] SimError),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

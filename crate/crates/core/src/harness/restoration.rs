use serde::{Deserialize, Serialize};

use crate::evaluation::{FlipMode, Restoration};
use crate::sim::SyntheticTask;

use super::report::{aggregate, RunReport};
use super::run::run_tasks;
use super::spec::{ExperimentSpec, NoiseSpec, Planner};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationRow {
    pub configuration: String,
    pub restoration: Restoration,
    pub judge_error_rate: f64,
    pub pass_rate: f64,
    /// Pass rate minus the noisy configuration's.
    pub recovered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationReport {
    pub error_rate: f64,
    pub planner: Planner,
    pub budget: usize,
    pub rows: Vec<RestorationRow>,
}

impl RestorationReport {
    pub fn row(&self, restoration: Restoration) -> &RestorationRow {
        self.rows
            .iter()
            .find(|r| r.restoration == restoration)
            .expect("all four configurations run")
    }
}

const CONFIGURATIONS: [(&str, Restoration); 4] = [
    ("noisy", Restoration::None),
    ("fix_false_positives", Restoration::FixFalsePositives),
    ("fix_false_negatives", Restoration::FixFalseNegatives),
    ("oracle", Restoration::All),
];

/// Runs the first planner of `spec` at its first budget under judge noise
/// at `error_rate`, once per restoration setting. Every setting sees the
/// same noise draws, so they differ only in which flips are undone.
pub fn run_restoration(
    spec: &ExperimentSpec,
    tasks: &[SyntheticTask],
    error_rate: f64,
) -> Result<RestorationReport, HarnessError> {
    spec.validate()?;
    let planner = spec.planners[0];
    let budget = spec.budgets[0];
    let mut rows: Vec<RestorationRow> = Vec::new();
    for (name, restoration) in CONFIGURATIONS {
        let run = ExperimentSpec {
            planners: vec![planner],
            budgets: vec![budget],
            variants: spec.variants[..1].to_vec(),
            noise: Some(NoiseSpec {
                error_rate,
                flip_mode: FlipMode::Both,
                restoration,
            }),
            keep_events: false,
            rows_out: None,
            ..spec.clone()
        };
        let report: RunReport = run_tasks(&run, tasks)?;
        let agg = &aggregate(&report.rows)[0];
        let base = rows.first().map_or(agg.pass_rate, |r| r.pass_rate);
        rows.push(RestorationRow {
            configuration: name.into(),
            restoration,
            judge_error_rate: agg.judge_error_rate,
            pass_rate: agg.pass_rate,
            recovered: agg.pass_rate - base,
        });
    }
    Ok(RestorationReport {
        error_rate,
        planner,
        budget,
        rows,
    })
}

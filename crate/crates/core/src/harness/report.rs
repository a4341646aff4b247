use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::search::{Event, StopReason};

use super::efficiency::{compute_efficiency, CurvePoint, Segment};
use super::spec::Planner;
use super::HarnessError;

/// One (variant, planner, budget, seed, task) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub task_id: String,
    pub planner: Planner,
    pub variant: String,
    pub budget: usize,
    pub seed: u64,
    pub pass: bool,
    pub tool_f1: f64,
    pub arg_f1: f64,
    pub plan_f1: f64,
    pub exec_f1: f64,
    /// Cell time on the configured clock.
    pub wall_time_s: f64,
    pub rollouts: usize,
    pub nodes_expanded: usize,
    pub executor_calls: u64,
    pub cache_hits: u64,
    pub pre_judge_calls: u64,
    pub post_judge_calls: u64,
    pub judge_calls: u64,
    pub judge_judgments: u64,
    pub judge_decision_errors: u64,
    pub stop_reason: Option<StopReason>,
    /// Set when the cell faulted; metrics are then zero.
    pub fault: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
}

/// CSV column order. Event logs are not part of the CSV form.
pub const CSV_COLUMNS: [&str; 22] = [
    "task_id",
    "planner",
    "variant",
    "budget",
    "seed",
    "pass",
    "tool_f1",
    "arg_f1",
    "plan_f1",
    "exec_f1",
    "wall_time_s",
    "rollouts",
    "nodes_expanded",
    "executor_calls",
    "cache_hits",
    "pre_judge_calls",
    "post_judge_calls",
    "judge_calls",
    "judge_judgments",
    "judge_decision_errors",
    "stop_reason",
    "fault",
];

impl Row {
    fn csv_record(&self) -> Vec<String> {
        let stop = self
            .stop_reason
            .map(|s| {
                serde_json::to_value(s)
                    .unwrap()
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .unwrap_or_default();
        vec![
            self.task_id.clone(),
            self.planner.to_string(),
            self.variant.clone(),
            self.budget.to_string(),
            self.seed.to_string(),
            u8::from(self.pass).to_string(),
            self.tool_f1.to_string(),
            self.arg_f1.to_string(),
            self.plan_f1.to_string(),
            self.exec_f1.to_string(),
            self.wall_time_s.to_string(),
            self.rollouts.to_string(),
            self.nodes_expanded.to_string(),
            self.executor_calls.to_string(),
            self.cache_hits.to_string(),
            self.pre_judge_calls.to_string(),
            self.post_judge_calls.to_string(),
            self.judge_calls.to_string(),
            self.judge_judgments.to_string(),
            self.judge_decision_errors.to_string(),
            stop,
            self.fault.clone().unwrap_or_default(),
        ]
    }

    fn from_csv_record(rec: &csv::StringRecord) -> Result<Self, String> {
        let get = |i: usize| {
            rec.get(i)
                .ok_or_else(|| format!("missing column {}", CSV_COLUMNS[i]))
        };
        fn num<T: std::str::FromStr>(s: &str, col: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("bad {col} `{s}`"))
        }
        let stop = get(20)?;
        let fault = get(21)?;
        Ok(Self {
            task_id: get(0)?.to_string(),
            planner: get(1)?.parse().map_err(|e: HarnessError| e.to_string())?,
            variant: get(2)?.to_string(),
            budget: num(get(3)?, "budget")?,
            seed: num(get(4)?, "seed")?,
            pass: get(5)? == "1",
            tool_f1: num(get(6)?, "tool_f1")?,
            arg_f1: num(get(7)?, "arg_f1")?,
            plan_f1: num(get(8)?, "plan_f1")?,
            exec_f1: num(get(9)?, "exec_f1")?,
            wall_time_s: num(get(10)?, "wall_time_s")?,
            rollouts: num(get(11)?, "rollouts")?,
            nodes_expanded: num(get(12)?, "nodes_expanded")?,
            executor_calls: num(get(13)?, "executor_calls")?,
            cache_hits: num(get(14)?, "cache_hits")?,
            pre_judge_calls: num(get(15)?, "pre_judge_calls")?,
            post_judge_calls: num(get(16)?, "post_judge_calls")?,
            judge_calls: num(get(17)?, "judge_calls")?,
            judge_judgments: num(get(18)?, "judge_judgments")?,
            judge_decision_errors: num(get(19)?, "judge_decision_errors")?,
            stop_reason: if stop.is_empty() {
                None
            } else {
                Some(
                    serde_json::from_value(serde_json::Value::String(stop.into()))
                        .map_err(|e| e.to_string())?,
                )
            },
            fault: (!fault.is_empty()).then(|| fault.to_string()),
            events: Vec::new(),
        })
    }
}

/// Summary of the rows sharing (variant, planner, budget).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: String,
    pub planner: Planner,
    pub budget: usize,
    pub cells: usize,
    pub faults: usize,
    pub pass_rate: f64,
    pub mean_tool_f1: f64,
    pub mean_arg_f1: f64,
    pub mean_plan_f1: f64,
    pub mean_exec_f1: f64,
    pub mean_wall_time_s: f64,
    pub median_nodes_expanded: f64,
    pub median_rollouts: f64,
    pub mean_executor_calls: f64,
    pub mean_judge_calls: f64,
    /// Passes per judge call over all cells.
    pub pass_per_judge_call: f64,
    pub judge_error_rate: f64,
}

/// Efficiency segments of one (variant, planner) curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySeries {
    pub variant: String,
    pub planner: Planner,
    pub points: Vec<CurvePoint>,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    pub efficiency: Vec<EfficiencySeries>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, Planner, usize), Vec<&Row>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.variant.clone(), r.planner, r.budget))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((variant, planner, budget), g)| {
            let passes = g.iter().filter(|r| r.pass).count();
            let judge_calls: u64 = g.iter().map(|r| r.judge_calls).sum();
            let judgments: u64 = g.iter().map(|r| r.judge_judgments).sum();
            let errors: u64 = g.iter().map(|r| r.judge_decision_errors).sum();
            Aggregate {
                variant,
                planner,
                budget,
                cells: g.len(),
                faults: g.iter().filter(|r| r.fault.is_some()).count(),
                pass_rate: passes as f64 / g.len() as f64,
                mean_tool_f1: mean(g.iter().map(|r| r.tool_f1)),
                mean_arg_f1: mean(g.iter().map(|r| r.arg_f1)),
                mean_plan_f1: mean(g.iter().map(|r| r.plan_f1)),
                mean_exec_f1: mean(g.iter().map(|r| r.exec_f1)),
                mean_wall_time_s: mean(g.iter().map(|r| r.wall_time_s)),
                median_nodes_expanded: median(
                    &mut g
                        .iter()
                        .map(|r| r.nodes_expanded as f64)
                        .collect::<Vec<_>>(),
                ),
                median_rollouts: median(
                    &mut g.iter().map(|r| r.rollouts as f64).collect::<Vec<_>>(),
                ),
                mean_executor_calls: mean(g.iter().map(|r| r.executor_calls as f64)),
                mean_judge_calls: mean(g.iter().map(|r| r.judge_calls as f64)),
                pass_per_judge_call: if judge_calls == 0 {
                    0.0
                } else {
                    passes as f64 / judge_calls as f64
                },
                judge_error_rate: if judgments == 0 {
                    0.0
                } else {
                    errors as f64 / judgments as f64
                },
            }
        })
        .collect()
}

pub fn efficiency_series(aggregates: &[Aggregate]) -> Vec<EfficiencySeries> {
    let mut curves: BTreeMap<(String, Planner), Vec<CurvePoint>> = BTreeMap::new();
    for a in aggregates {
        curves
            .entry((a.variant.clone(), a.planner))
            .or_default()
            .push(CurvePoint {
                budget: a.budget,
                performance: a.pass_rate,
                time_s: a.mean_wall_time_s,
            });
    }
    curves
        .into_iter()
        .filter_map(|((variant, planner), mut points)| {
            points.sort_by_key(|p| p.budget);
            let segments = compute_efficiency(&points).ok()?;
            Some(EfficiencySeries {
                variant,
                planner,
                points,
                segments,
            })
        })
        .collect()
}

impl RunReport {
    /// Builds aggregates and curves from rows alone.
    pub fn from_rows(rows: Vec<Row>) -> Self {
        let aggregates = aggregate(&rows);
        let efficiency = efficiency_series(&aggregates);
        Self {
            rows,
            aggregates,
            efficiency,
        }
    }

    pub fn faulted(&self) -> usize {
        self.rows.iter().filter(|r| r.fault.is_some()).count()
    }

    pub fn aggregate_for(
        &self,
        variant: &str,
        planner: Planner,
        budget: usize,
    ) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.variant == variant && a.planner == planner && a.budget == budget)
    }

    /// True when the stored aggregates equal a recomputation from rows.
    pub fn is_consistent(&self) -> bool {
        let again = aggregate(&self.rows);
        self.aggregates == again && self.efficiency == efficiency_series(&again)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(raw).map_err(|e| HarnessError::Report(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn aggregates_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for a in &self.aggregates {
            w.serialize(a).expect("aggregate row");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("header");
    for r in rows {
        w.write_record(r.csv_record()).expect("row");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn rows_from_csv(raw: &str) -> Result<Vec<Row>, HarnessError> {
    let mut r = csv::Reader::from_reader(raw.as_bytes());
    let header = r
        .headers()
        .map_err(|e| HarnessError::Report(e.to_string()))?;
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(HarnessError::Report("unexpected CSV header".into()));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| HarnessError::Report(e.to_string()))?;
            Row::from_csv_record(&rec)
                .map_err(|e| HarnessError::Report(format!("row {}: {e}", i + 1)))
        })
        .collect()
}

/// Reads rows from a report JSON, a CSV file or a JSON-lines row log.
pub fn load_rows(path: &Path) -> Result<Vec<Row>, HarnessError> {
    let raw = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "csv" => rows_from_csv(&raw),
        "jsonl" => raw
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Report(e.to_string())))
            .collect(),
        _ => Ok(RunReport::from_json(&raw)?.rows),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Writes the report. JSON is one file with rows (and their event logs),
/// aggregates and efficiency curves. CSV writes the rows to `path`
/// without event logs and the aggregates next to it as
/// `<stem>.aggregates.csv`.
pub fn emit_report(
    report: &RunReport,
    format: ReportFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Json => fs::write(path, report.to_json())?,
        ReportFormat::Csv => {
            fs::write(path, report.to_csv())?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("report");
            fs::write(
                path.with_file_name(format!("{stem}.aggregates.csv")),
                report.aggregates_csv(),
            )?;
        }
    }
    Ok(())
}

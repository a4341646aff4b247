use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::search::TrajectoryStep;
use crate::tool_model::Context;

use super::task::SyntheticTask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub pass: bool,
    pub tool_f1: f64,
    pub arg_f1: f64,
    pub plan_f1: f64,
    pub exec_f1: f64,
}

fn f1<T: Ord>(predicted: &BTreeSet<T>, gold: &BTreeSet<T>) -> f64 {
    let hit = predicted.intersection(gold).count() as f64;
    if hit == 0.0 {
        return 0.0;
    }
    let p = hit / predicted.len() as f64;
    let r = hit / gold.len() as f64;
    2.0 * p * r / (p + r)
}

/// Set F1 over two collections.
pub fn set_f1<T: Ord + Clone>(predicted: &[T], gold: &[T]) -> f64 {
    f1(
        &predicted.iter().cloned().collect(),
        &gold.iter().cloned().collect(),
    )
}

fn ordered_pairs(seq: &[&str]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] != seq[j] {
                out.insert((seq[i].to_string(), seq[j].to_string()));
            }
        }
    }
    out
}

/// Scores a trajectory against the gold plan. `final_context` decides
/// the pass flag.
pub fn evaluate_success(
    task: &SyntheticTask,
    trajectory: &[TrajectoryStep],
    final_context: &Context,
) -> Metrics {
    if trajectory.is_empty() {
        return Metrics::default();
    }
    let gold_tools: BTreeSet<&str> = task.gold_tools().collect();
    let pred_tools: BTreeSet<&str> = trajectory.iter().map(|s| s.tool.as_str()).collect();

    let binding = |tool: &str, field: &str, v: &serde_json::Value| {
        (tool.to_string(), field.to_string(), v.to_string())
    };
    let gold_args: BTreeSet<_> = task
        .gold_plan
        .iter()
        .flat_map(|g| g.args.iter().map(move |(f, v)| binding(&g.tool, f, v)))
        .collect();
    let pred_args: BTreeSet<_> = trajectory
        .iter()
        .flat_map(|s| s.arguments.iter().map(move |(f, v)| binding(&s.tool, f, v)))
        .collect();

    let seq: Vec<&str> = trajectory.iter().map(|s| s.tool.as_str()).collect();
    let pred_pairs = ordered_pairs(&seq);
    let plan_f1 = task
        .gold_orders()
        .iter()
        .map(|order| {
            let names: Vec<&str> = order
                .iter()
                .map(|&i| task.gold_plan[i].tool.as_str())
                .collect();
            f1(&pred_pairs, &ordered_pairs(&names))
        })
        .fold(0.0, f64::max);

    let clean: BTreeSet<&str> = trajectory
        .iter()
        .filter(|s| !s.output.is_error())
        .map(|s| s.tool.as_str())
        .collect();

    Metrics {
        pass: task.goal_reached(final_context),
        tool_f1: f1(&pred_tools, &gold_tools),
        arg_f1: f1(&pred_args, &gold_args),
        plan_f1,
        exec_f1: f1(&clean, &gold_tools),
    }
}

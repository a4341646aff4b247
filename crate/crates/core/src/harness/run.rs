use std::fs::OpenOptions;
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{run_best_first, run_dfs_backtrack, run_greedy, run_vanilla_mcts};
use crate::evaluation::{Evaluator, NoiseConfig, NoiseStats, NoisyEvaluator};
use crate::search::{run_search, SearchConfig, SearchError, SearchResult};
use crate::sim::{evaluate_success, read_suite, ScriptedJudge, SyntheticTask};
use crate::tool_model::{retrieve_shortlist, ToolRegistry};

use super::report::{Row, RunReport};
use super::spec::{ExperimentSpec, NoiseSpec, Planner, Variant};
use super::HarnessError;

/// One grid cell before it runs.
#[derive(Debug, Clone, Copy)]
pub struct Cell<'a> {
    pub task: &'a SyntheticTask,
    pub task_index: usize,
    pub planner: Planner,
    pub variant: &'a Variant,
    pub budget: usize,
    pub seed: u64,
}

/// Per-cell seed: the run seed mixed with the task position.
pub fn cell_seed(seed: u64, task_index: usize) -> u64 {
    let mut z = seed ^ (task_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The registry a planner sees: the task's tools cut to the lexical
/// shortlist.
pub fn planning_registry(task: &SyntheticTask, shortlist: usize) -> ToolRegistry {
    let full = task.registry();
    let keep: Vec<String> = retrieve_shortlist(&task.query.text, &full, shortlist)
        .into_iter()
        .map(|c| c.name.clone())
        .collect();
    full.subset(keep.iter().map(String::as_str))
}

/// Search settings for a cell: ablations applied, rollouts bounded by both
/// the budget and the configured `r_max`.
pub fn cell_config(
    spec: &ExperimentSpec,
    variant: &Variant,
    budget: usize,
    seed: u64,
) -> SearchConfig {
    let mut c = variant.ablation.apply(&spec.search);
    c.r_max = budget.min(spec.search.r_max);
    c.seed = seed;
    c
}

fn dispatch(
    planner: Planner,
    task: &SyntheticTask,
    registry: &ToolRegistry,
    judge: &dyn Evaluator,
    budget: usize,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    match planner {
        Planner::Greedy => run_greedy(task, registry, judge, task, budget, config),
        Planner::BestFirst => run_best_first(task, registry, judge, task, budget, config),
        Planner::Dfs => run_dfs_backtrack(task, registry, judge, task, budget, config),
        Planner::VanillaMcts => run_vanilla_mcts(task, registry, judge, task, config),
        Planner::Tooltree => run_search(task, registry, judge, task, config),
    }
}

/// Runs one cell. Faults become rows with `fault` set.
pub fn run_cell(spec: &ExperimentSpec, cell: Cell<'_>, noise: Option<&NoiseSpec>) -> Row {
    let seed = cell_seed(cell.seed, cell.task_index);
    let config = cell_config(spec, cell.variant, cell.budget, seed);
    let registry = planning_registry(cell.task, spec.shortlist);
    let base = ScriptedJudge::new(spec.judge, cell.task, spec.tiers);
    let start = Instant::now();
    let (outcome, stats) = match noise {
        None => (
            dispatch(
                cell.planner,
                cell.task,
                &registry,
                &base,
                cell.budget,
                &config,
            ),
            NoiseStats::default(),
        ),
        Some(n) => {
            let noisy_config = NoiseConfig {
                error_rate: n.error_rate,
                flip_mode: n.flip_mode,
                seed: seed.rotate_left(17),
            };
            let judge = NoisyEvaluator::new(base, noisy_config, config.tau_pre, config.tau_post)
                .with_restoration(n.restoration);
            let out = dispatch(
                cell.planner,
                cell.task,
                &registry,
                &judge,
                cell.budget,
                &config,
            );
            (out, judge.stats())
        }
    };
    let mut row = Row {
        task_id: cell.task.task_id.clone(),
        planner: cell.planner,
        variant: cell.variant.name.clone(),
        budget: cell.budget,
        seed: cell.seed,
        pass: false,
        tool_f1: 0.0,
        arg_f1: 0.0,
        plan_f1: 0.0,
        exec_f1: 0.0,
        wall_time_s: 0.0,
        rollouts: 0,
        nodes_expanded: 0,
        executor_calls: 0,
        cache_hits: 0,
        pre_judge_calls: 0,
        post_judge_calls: 0,
        judge_calls: 0,
        judge_judgments: stats.judgments,
        judge_decision_errors: stats.decision_errors,
        stop_reason: None,
        fault: None,
        events: Vec::new(),
    };
    match outcome {
        Ok(r) => {
            let m = evaluate_success(cell.task, &r.best_trajectory, &r.final_context);
            let c = r.counters;
            row.pass = m.pass;
            row.tool_f1 = m.tool_f1;
            row.arg_f1 = m.arg_f1;
            row.plan_f1 = m.plan_f1;
            row.exec_f1 = m.exec_f1;
            row.wall_time_s = if config.wall_clock {
                start.elapsed().as_secs_f64()
            } else {
                c.executor_calls as f64 * config.exec_cost_s
                    + c.judge_calls() as f64 * config.judge_cost_s
            };
            row.rollouts = r.rollouts_used;
            row.nodes_expanded = r.nodes_expanded;
            row.executor_calls = c.executor_calls;
            row.cache_hits = c.cache_hits;
            row.pre_judge_calls = c.pre_judge_calls;
            row.post_judge_calls = c.post_judge_calls;
            row.judge_calls = c.judge_calls();
            row.stop_reason = Some(r.stop_reason);
            if spec.keep_events {
                row.events = r.events;
            }
        }
        Err(e) => row.fault = Some(e.to_string()),
    }
    row
}

/// Every cell of the grid in a fixed order: variant, planner, budget,
/// seed, task.
pub fn grid<'a>(spec: &'a ExperimentSpec, tasks: &'a [SyntheticTask]) -> Vec<Cell<'a>> {
    let mut cells = Vec::with_capacity(spec.cell_count(tasks.len()));
    for variant in &spec.variants {
        for &planner in &spec.planners {
            for &budget in &spec.budgets {
                for &seed in &spec.seeds {
                    for (task_index, task) in tasks.iter().enumerate() {
                        cells.push(Cell {
                            task,
                            task_index,
                            planner,
                            variant,
                            budget,
                            seed,
                        });
                    }
                }
            }
        }
    }
    cells
}

/// Runs the grid over `tasks` in parallel. Rows come back in grid order;
/// with `rows_out` set each row is also appended there as it finishes.
pub fn run_tasks(
    spec: &ExperimentSpec,
    tasks: &[SyntheticTask],
) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let sink = match &spec.rows_out {
        Some(p) => Some(Mutex::new(
            OpenOptions::new().create(true).append(true).open(p)?,
        )),
        None => None,
    };
    let rows: Vec<Row> = grid(spec, tasks)
        .into_par_iter()
        .map(|cell| {
            let row = run_cell(spec, cell, spec.noise.as_ref());
            if let Some(sink) = &sink {
                let line = serde_json::to_string(&row).expect("row serializes");
                let mut f = sink.lock().expect("row sink poisoned");
                // a failed append loses the partial log only, never the run
                let _ = writeln!(f, "{line}");
            }
            row
        })
        .collect();
    Ok(RunReport::from_rows(rows))
}

/// Loads the suite named by the spec and runs the grid.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let tasks = read_suite(&spec.suite)?;
    run_tasks(spec, &tasks)
}

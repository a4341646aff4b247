//! Acceptance checks on the default synthetic suite. Prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{default_suite, expansions_after_close, node_paths, replay_backups, Chain, Counting};
use tooltree::baselines::{run_best_first, run_dfs_backtrack, run_greedy, run_vanilla_mcts};
use tooltree::evaluation::Restoration;
use tooltree::harness::{
    ablation_variants, planning_registry, run_restoration, run_tasks, ExperimentSpec, Planner,
    RunReport,
};
use tooltree::search::{run_search, uct_score, SearchConfig, SearchResult, StopReason};
use tooltree::sim::{JudgeKind, JudgeTiers, ScriptedJudge, SyntheticTask};

const SEEDS: [u64; 3] = [1, 2, 3];
const BUDGETS: [usize; 4] = [8, 16, 32, 64];
const UCT_SAMPLES: usize = 10_000;
const UCT_TOLERANCE: f64 = 1e-12;
const MEAN_TOLERANCE: f64 = 1e-12;
const BOOKKEEPING_LIMIT: Duration = Duration::from_secs(60);
const PRUNING_LIMIT: Duration = Duration::from_secs(300);
/// Tasks and depth cap for the exhaustive pruning comparison.
const EXHAUSTIVE_TASKS: usize = 50;
const EXHAUSTIVE_DEPTH: usize = 4;
const PRUNING_RATIO: f64 = 1.15;
const HEADLINE_BUDGET: usize = 32;
const HEADLINE_MARGIN: f64 = 0.10;
const NOISE_RATE: f64 = 0.25;
const MONOTONE_SLACK: f64 = 0.0;
const EARLY_STOP_AT: usize = 22;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spec(planners: Vec<Planner>, budgets: Vec<usize>) -> ExperimentSpec {
    let mut s = ExperimentSpec::new("default-suite", planners, budgets, SEEDS.to_vec());
    s.keep_events = false;
    s
}

fn pass_rate(report: &RunReport, variant: &str, planner: Planner, budget: usize) -> f64 {
    report
        .aggregate_for(variant, planner, budget)
        .expect("aggregate present")
        .pass_rate
}

fn judge(task: &SyntheticTask) -> ScriptedJudge<'_> {
    ScriptedJudge::new(JudgeKind::Forecast, task, JudgeTiers::graded())
}

fn selection_and_bookkeeping(tasks: &[SyntheticTask]) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..UCT_SAMPLES {
        let q: f64 = rng.gen();
        let n: u64 = rng.gen_range(1..500);
        let parent: u64 = n + rng.gen_range(0..5000);
        let prior: f64 = rng.gen();
        let lambda: f64 = rng.gen_range(0.0..3.0);
        let expected = q + lambda * prior * ((parent as f64).ln() / n as f64).powf(0.5);
        worst = worst.max((uct_score(q, n, prior, parent, lambda) - expected).abs());
    }
    let unvisited = uct_score(0.3, 0, 0.5, 10, 1.4) == f64::INFINITY;

    let mut bad = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let registry = planning_registry(task, 20);
        let config = SearchConfig {
            seed: i as u64,
            ..SearchConfig::default()
        };
        let r = run_search(task, &registry, &judge(task), task, &config).expect("search runs");
        if let Err(e) = replay_backups(&r, MEAN_TOLERANCE) {
            bad.push(format!("{}: {e}", task.task_id));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= UCT_TOLERANCE && unvisited && bad.is_empty() && elapsed < BOOKKEEPING_LIMIT,
        format!(
            "max |uct - oracle| = {worst:.1e} over {UCT_SAMPLES}; {} replay mismatches over {} runs; {:.1}s",
            bad.len(),
            tasks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn exhaustive(task: &SyntheticTask, tau_pre: f64) -> SearchResult {
    let config = SearchConfig {
        tau_pre,
        top_k: None,
        r_max: usize::MAX,
        early_stop_window: usize::MAX / 2,
        max_depth: EXHAUSTIVE_DEPTH,
        ..SearchConfig::default()
    };
    run_search(
        task,
        &planning_registry(task, 20),
        &judge(task),
        task,
        &config,
    )
    .expect("search runs")
}

fn pruning_soundness(tasks: &[SyntheticTask]) -> Outcome {
    let start = Instant::now();
    let mut closed_expansions = 0;
    for (i, task) in tasks.iter().enumerate() {
        let config = SearchConfig {
            seed: i as u64,
            ..SearchConfig::default()
        };
        let r = run_search(
            task,
            &planning_registry(task, 20),
            &judge(task),
            task,
            &config,
        )
        .expect("search runs");
        closed_expansions += expansions_after_close(&r);
    }
    let mut not_subset = 0;
    let mut strict = 0;
    for task in tasks.iter().take(EXHAUSTIVE_TASKS) {
        let pruned = exhaustive(task, 0.3);
        let open = exhaustive(task, 0.0);
        let all_exhausted = pruned.stop_reason == StopReason::TreeExhausted
            && open.stop_reason == StopReason::TreeExhausted;
        let (a, b) = (node_paths(&pruned), node_paths(&open));
        if !all_exhausted
            || !a.is_subset(&b)
            || !pruned.expanded_paths().is_subset(&open.expanded_paths())
        {
            not_subset += 1;
        }
        if a.len() < b.len() {
            strict += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        closed_expansions == 0 && not_subset == 0 && elapsed < PRUNING_LIMIT,
        format!(
            "{closed_expansions} expansions of closed nodes; {not_subset}/{EXHAUSTIVE_TASKS} subset violations ({strict} strictly smaller); {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn pruning_savings(ablations: &RunReport) -> Outcome {
    let agg = |v: &str| {
        ablations
            .aggregate_for(v, Planner::Tooltree, HEADLINE_BUDGET)
            .expect("variant ran")
    };
    let full = agg("full");
    let nodes = agg("no_pre_pruning").median_nodes_expanded / full.median_nodes_expanded;
    let rollouts = agg("no_post_pruning").median_rollouts / full.median_rollouts;
    outcome(
        nodes >= PRUNING_RATIO && rollouts >= PRUNING_RATIO,
        format!(
            "median nodes {} vs {} (x{nodes:.2}); median rollouts {} vs {} (x{rollouts:.2}); need x{PRUNING_RATIO}",
            agg("no_pre_pruning").median_nodes_expanded,
            full.median_nodes_expanded,
            agg("no_post_pruning").median_rollouts,
            full.median_rollouts
        ),
    )
}

fn planner_ordering(grid: &RunReport) -> Outcome {
    let p = |planner| pass_rate(grid, "full", planner, HEADLINE_BUDGET);
    let (tt, va, bf, gr) = (
        p(Planner::Tooltree),
        p(Planner::VanillaMcts),
        p(Planner::BestFirst),
        p(Planner::Greedy),
    );
    outcome(
        tt > va && va > bf && bf >= gr && tt - gr >= HEADLINE_MARGIN,
        format!("tooltree {tt:.3}, vanilla_mcts {va:.3}, best_first {bf:.3}, greedy {gr:.3}"),
    )
}

fn budget_curves(grid: &RunReport) -> Outcome {
    let mut notes = Vec::new();
    let mut monotone = true;
    for planner in [
        Planner::Greedy,
        Planner::BestFirst,
        Planner::VanillaMcts,
        Planner::Tooltree,
    ] {
        let rates: Vec<f64> = BUDGETS
            .iter()
            .map(|&b| pass_rate(grid, "full", planner, b))
            .collect();
        if rates.windows(2).any(|w| w[1] + MONOTONE_SLACK < w[0]) {
            monotone = false;
        }
        notes.push(format!(
            "{planner} {:?}",
            rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ));
    }
    let segment = |planner: Planner| {
        grid.efficiency
            .iter()
            .find(|e| e.planner == planner && e.variant == "full")
            .and_then(|e| {
                e.segments
                    .iter()
                    .find(|s| s.from_budget == 16 && s.to_budget == 32)
            })
            .and_then(|s| s.efficiency)
    };
    let best = segment(Planner::Tooltree);
    let others: Vec<(Planner, f64)> = [Planner::Greedy, Planner::BestFirst, Planner::VanillaMcts]
        .into_iter()
        .filter_map(|p| segment(p).map(|e| (p, e)))
        .collect();
    let top = best.is_some_and(|b| others.iter().all(|&(_, e)| b > e));
    notes.push(format!(
        "16->32 efficiency tooltree {:?} vs {:?}",
        best,
        others
            .iter()
            .map(|(p, e)| format!("{p} {e:.4}"))
            .collect::<Vec<_>>()
    ));
    outcome(monotone && top, notes.join("; "))
}

fn ablation_table(ablations: &RunReport) -> Outcome {
    let rows: Vec<_> = ablation_variants()
        .into_iter()
        .filter_map(|v| {
            ablations
                .aggregate_for(&v.name, Planner::Tooltree, HEADLINE_BUDGET)
                .cloned()
        })
        .collect();
    let all_ran = rows.len() == 7 && rows.iter().all(|a| a.faults == 0 && a.cells > 0);
    let full = rows
        .iter()
        .find(|a| a.variant == "full")
        .map_or(0.0, |a| a.pass_rate);
    let top = rows
        .iter()
        .all(|a| a.variant == "full" || a.pass_rate < full);
    let both = rows
        .iter()
        .find(|a| a.variant == "no_both_evaluation")
        .map_or(f64::MAX, |a| a.pass_per_judge_call);
    let lowest = rows
        .iter()
        .all(|a| a.variant == "no_both_evaluation" || a.pass_per_judge_call > both);
    let table: Vec<String> = rows
        .iter()
        .map(|a| {
            format!(
                "{} {:.3}/{:.4}",
                a.variant, a.pass_rate, a.pass_per_judge_call
            )
        })
        .collect();
    outcome(
        all_ran && top && lowest,
        format!("pass/per-call: {}", table.join(", ")),
    )
}

fn restoration(tasks: &[SyntheticTask], grid: &RunReport) -> Outcome {
    let s = spec(vec![Planner::Tooltree], vec![HEADLINE_BUDGET]);
    let report = run_restoration(&s, tasks, NOISE_RATE).expect("restoration runs");
    let fp = report.row(Restoration::FixFalsePositives).recovered;
    let fn_ = report.row(Restoration::FixFalseNegatives).recovered;
    let noisy = report.row(Restoration::None).pass_rate;
    let greedy = pass_rate(grid, "full", Planner::Greedy, HEADLINE_BUDGET);
    outcome(
        fn_ > fp && noisy > greedy,
        format!(
            "error rate {:.3}; recovered by fixing FN {fn_:+.3}, FP {fp:+.3}; noisy tooltree {noisy:.3} vs greedy {greedy:.3}",
            report.row(Restoration::None).judge_error_rate
        ),
    )
}

fn determinism_and_caching(tasks: &[SyntheticTask]) -> Outcome {
    let subset = &tasks[..40];
    let s = spec(Planner::ALL.to_vec(), vec![16]);
    let a = run_tasks(&s, subset).expect("grid runs");
    let b = run_tasks(&s, subset).expect("grid runs");
    let identical = a.to_json() == b.to_json() && a.to_csv() == b.to_csv();

    let mut repeated = 0;
    let mut hits = 0;
    for (i, task) in subset.iter().enumerate() {
        let registry = planning_registry(task, 20);
        let j = judge(task);
        let config = SearchConfig {
            seed: i as u64,
            r_max: HEADLINE_BUDGET,
            ..SearchConfig::default()
        };
        let runs: [&dyn Fn(&Counting<SyntheticTask>) -> SearchResult; 5] = [
            &|x| run_search(task, &registry, &j, x, &config).unwrap(),
            &|x| run_vanilla_mcts(task, &registry, &j, x, &config).unwrap(),
            &|x| run_greedy(task, &registry, &j, x, HEADLINE_BUDGET, &config).unwrap(),
            &|x| run_best_first(task, &registry, &j, x, HEADLINE_BUDGET, &config).unwrap(),
            &|x| run_dfs_backtrack(task, &registry, &j, x, HEADLINE_BUDGET, &config).unwrap(),
        ];
        for run in runs {
            let counting = Counting::new(task);
            let r = run(&counting);
            if counting.max_per_key() > 1 {
                repeated += 1;
            }
            hits += r.counters.cache_hits;
        }
    }
    outcome(
        identical && repeated == 0 && hits > 0,
        format!("reports identical: {identical}; {repeated} runs re-executed a call; {hits} cache hits served"),
    )
}

fn early_stop(tasks: &[SyntheticTask], grid: &RunReport) -> Outcome {
    let mut rewards: Vec<f64> = (1..=12).map(|k| 0.4 + 0.04 * k as f64).collect();
    rewards.extend(std::iter::repeat(0.88).take(18));
    let chain = Chain::new(rewards);
    let config = SearchConfig {
        max_depth: 30,
        ..SearchConfig::default()
    };
    let r = run_search(&chain, &chain.registry(), &chain, &chain, &config).expect("chain runs");
    let frozen = r.trace[11..].iter().all(|t| t.best_q == r.trace[11].best_q);
    let stops = r.stop_reason == StopReason::EarlyStop && r.rollouts_used == EARLY_STOP_AT;

    let r_max = SearchConfig::default().r_max;
    let searches = [Planner::Tooltree, Planner::VanillaMcts];
    let mut over = grid
        .rows
        .iter()
        .filter(|row| searches.contains(&row.planner) && row.rollouts > r_max)
        .count();
    for (i, task) in tasks.iter().enumerate().take(50) {
        let config = SearchConfig {
            seed: i as u64,
            early_stop_window: 1000,
            ..SearchConfig::default()
        };
        let r = run_search(
            task,
            &planning_registry(task, 20),
            &judge(task),
            task,
            &config,
        )
        .expect("search runs");
        if r.rollouts_used > r_max || r.trace.len() > r_max {
            over += 1;
        }
    }
    outcome(
        frozen && stops && over == 0,
        format!(
            "constructed task stopped at rollout {} ({:?}); {over} runs above R_max={r_max}",
            r.rollouts_used, r.stop_reason
        ),
    )
}

fn main() -> ExitCode {
    let tasks = default_suite();
    let grid = run_tasks(
        &spec(
            vec![
                Planner::Greedy,
                Planner::BestFirst,
                Planner::VanillaMcts,
                Planner::Tooltree,
            ],
            BUDGETS.to_vec(),
        ),
        &tasks,
    )
    .expect("grid runs");
    let mut ablation_spec = spec(vec![Planner::Tooltree], vec![HEADLINE_BUDGET]);
    ablation_spec.variants = ablation_variants();
    let ablations = run_tasks(&ablation_spec, &tasks).expect("ablations run");

    let results = [
        (
            "UCT arithmetic, running means and visit conservation",
            selection_and_bookkeeping(&tasks),
        ),
        (
            "no expansion of closed nodes; pre-pruned tree is a subset",
            pruning_soundness(&tasks),
        ),
        (
            "pruning saves nodes and rollouts",
            pruning_savings(&ablations),
        ),
        ("planner ordering at budget 32", planner_ordering(&grid)),
        ("budget curves and 16->32 efficiency", budget_curves(&grid)),
        ("ablation table", ablation_table(&ablations)),
        ("judge-noise restoration", restoration(&tasks, &grid)),
        (
            "byte-identical reports and call caching",
            determinism_and_caching(&tasks),
        ),
        ("early stop and rollout cap", early_stop(&tasks, &grid)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {} {}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

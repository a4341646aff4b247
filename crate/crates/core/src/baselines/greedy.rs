use crate::evaluation::Evaluator;
use crate::search::{
    score_candidates, Executor, PlanningTask, SearchConfig, SearchError, SearchResult, StopReason,
};
use crate::tool_model::{Context, ToolRegistry};

use super::session::{step, Session};

/// Executes the highest-prior admissible tool at every step, never
/// backtracking. Stops at the goal, at `config.max_depth`, after `budget`
/// steps, or when nothing is admissible. Step rewards are goal indicators.
pub fn run_greedy<T: PlanningTask + ?Sized>(
    task: &T,
    registry: &ToolRegistry,
    evaluator: &dyn Evaluator,
    executor: &dyn Executor,
    budget: usize,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    if registry.is_empty() {
        return Err(SearchError::EmptyRegistry);
    }
    let mut s = Session::new(task, evaluator, executor, config);
    let mut ctx = Context::new(task.query().clone());
    let mut steps = Vec::new();
    let reason = loop {
        if task.is_goal(&ctx) {
            break StopReason::GoalReached;
        }
        if steps.len() >= budget.min(config.max_depth) {
            break StopReason::Budget;
        }
        let (scored, calls) = score_candidates(&ctx, registry, evaluator, true)?;
        s.meter.counters.pre_judge_calls += calls;
        s.expansions += 1;
        let Some(best) = scored.into_iter().next() else {
            break StopReason::TreeExhausted;
        };
        let card = registry
            .get(&best.action.tool)
            .expect("scored from registry");
        let out = s.execute(card, &best.action.draft, &ctx);
        let after = ctx.extended(card, best.action.draft.clone(), out.clone());
        let reward = if task.is_goal(&after) { 1.0 } else { 0.0 };
        steps.push(step(card, &best.action.draft, &ctx, out, reward));
        ctx = after;
    };
    Ok(s.finish(steps, ctx, reason))
}

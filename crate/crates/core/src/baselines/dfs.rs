use crate::evaluation::Evaluator;
use crate::search::{
    score_candidates, Executor, PlanningTask, ScoredAction, SearchConfig, SearchError,
    SearchResult, StopReason, TrajectoryStep,
};
use crate::tool_model::{Context, ToolRegistry};

use super::session::{step, Session};

struct Frame {
    context: Context,
    candidates: Vec<ScoredAction>,
    next: usize,
}

/// Depth-first descent in prior order, executing every step. A step whose
/// output is an error token or whose post score is below `config.tau_post`
/// is abandoned for the next sibling; a frame with no siblings left is
/// popped. `budget` bounds tool calls, cache hits included.
pub fn run_dfs_backtrack<T: PlanningTask + ?Sized>(
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
    let frame = |s: &mut Session<'_, T>, context: Context| -> Result<Frame, SearchError> {
        let (candidates, calls) = score_candidates(&context, registry, evaluator, true)?;
        s.meter.counters.pre_judge_calls += calls;
        s.expansions += 1;
        Ok(Frame {
            context,
            candidates,
            next: 0,
        })
    };
    let root = Context::new(task.query().clone());
    if task.is_goal(&root) {
        return Ok(s.finish(Vec::new(), root, StopReason::GoalReached));
    }
    let mut stack = vec![frame(&mut s, root)?];
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    let reason = loop {
        if s.executions() as usize >= budget {
            break StopReason::Budget;
        }
        let top = stack.last_mut().expect("stack holds the root");
        let Some(cand) = top.candidates.get(top.next).cloned() else {
            stack.pop();
            if stack.is_empty() {
                break StopReason::TreeExhausted;
            }
            steps.pop();
            continue;
        };
        top.next += 1;
        let before = top.context.clone();
        let card = registry
            .get(&cand.action.tool)
            .expect("scored from registry");
        let out = s.execute(card, &cand.action.draft, &before);
        let post = s.judge_post(card, &cand.action.draft, &before, &out)?;
        if out.is_error() || post < config.tau_post {
            continue;
        }
        let after = before.extended(card, cand.action.draft.clone(), out.clone());
        steps.push(step(card, &cand.action.draft, &before, out, post));
        if task.is_goal(&after) {
            break StopReason::GoalReached;
        }
        if steps.len() >= config.max_depth {
            steps.pop();
            continue;
        }
        stack.push(frame(&mut s, after)?);
    };
    let context = match steps.len() {
        0 => Context::new(task.query().clone()),
        _ if reason == StopReason::GoalReached => {
            let last = stack.last().unwrap();
            let st = steps.last().unwrap();
            let card = registry.get(&st.tool).unwrap();
            let draft = last.candidates[last.next - 1].action.draft.clone();
            last.context.extended(card, draft, st.output.clone())
        }
        _ => stack.last().map(|f| f.context.clone()).unwrap(),
    };
    Ok(s.finish(steps, context, reason))
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::evaluation::Evaluator;
use crate::search::{
    score_candidates, Action, Executor, PlanningTask, SearchConfig, SearchError, SearchResult,
    StopReason, TrajectoryStep,
};
use crate::tool_model::{Context, ToolOutput, ToolRegistry};

use super::session::{step, Session};

struct Entry {
    actions: Vec<Action>,
    priors: Vec<f64>,
    /// Context with placeholder outputs; nothing on the path has run.
    context: Context,
    tie: f64,
}

impl Entry {
    fn score(&self) -> f64 {
        self.priors.iter().sum::<f64>() / self.priors.len() as f64
    }

    fn outranks(&self, other: &Entry) -> bool {
        let (a, b) = (self.score(), other.score());
        if a != b {
            return a > b;
        }
        if self.actions.len() != other.actions.len() {
            return self.actions.len() > other.actions.len();
        }
        self.tie > other.tie
    }
}

fn placeholder(card: &crate::tool_model::ToolCard) -> ToolOutput {
    let payload: BTreeMap<String, Value> = card
        .outputs
        .iter()
        .map(|f| {
            (
                f.name.clone(),
                Value::String(format!("{}:pending", card.name)),
            )
        })
        .collect();
    ToolOutput::ok(payload)
}

/// Best-first search over unexecuted partial plans keyed by the mean prior
/// along the path. Expanding the root is free; each later pop of the
/// highest-ranked plan costs one unit of `budget`. A plan whose last tool
/// yields the task's answer type is executed end to end; if that misses
/// the goal the search carries on. Tool calls, cache-served replays of
/// shared prefixes included, never exceed `budget`.
pub fn run_best_first<T: PlanningTask + ?Sized>(
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
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let root = Context::new(task.query().clone());
    if task.is_goal(&root) {
        return Ok(s.finish(Vec::new(), root, StopReason::GoalReached));
    }
    let answer_type = task.answer_type();
    let mut frontier: Vec<Entry> = Vec::new();
    let expand =
        |s: &mut Session<'_, T>, rng: &mut ChaCha8Rng, base: &Entry, frontier: &mut Vec<Entry>| {
            let (scored, calls) = score_candidates(&base.context, registry, evaluator, true)?;
            s.meter.counters.pre_judge_calls += calls;
            s.expansions += 1;
            for c in scored {
                let card = registry.get(&c.action.tool).expect("scored from registry");
                let mut e = Entry {
                    actions: base.actions.clone(),
                    priors: base.priors.clone(),
                    context: base
                        .context
                        .extended(card, c.action.draft.clone(), placeholder(card)),
                    tie: rng.gen::<f64>() * config.jitter_magnitude,
                };
                e.actions.push(c.action);
                e.priors.push(c.prior);
                frontier.push(e);
            }
            Ok::<_, SearchError>(())
        };
    let seed = Entry {
        actions: Vec::new(),
        priors: Vec::new(),
        context: root.clone(),
        tie: 0.0,
    };
    expand(&mut s, &mut rng, &seed, &mut frontier)?;

    let mut pops = 0;
    let mut last_run: (Vec<TrajectoryStep>, Context) = (Vec::new(), root);
    let reason = loop {
        if pops >= budget {
            break StopReason::Budget;
        }
        let Some(best) = (0..frontier.len()).reduce(|i, j| {
            if frontier[j].outranks(&frontier[i]) {
                j
            } else {
                i
            }
        }) else {
            break StopReason::TreeExhausted;
        };
        let entry = frontier.swap_remove(best);
        pops += 1;
        let last = registry.get(&entry.actions.last().unwrap().tool).unwrap();
        let complete = answer_type
            .as_ref()
            .map_or(true, |t| last.outputs.iter().any(|f| &f.ty == t));
        if !complete {
            if entry.actions.len() < config.max_depth {
                expand(&mut s, &mut rng, &entry, &mut frontier)?;
            }
            continue;
        }
        let mut ctx = Context::new(task.query().clone());
        let mut steps = Vec::new();
        let mut cut = false;
        for a in &entry.actions {
            if s.executions() as usize >= budget {
                cut = true;
                break;
            }
            let card = registry.get(&a.tool).unwrap();
            let out = s.execute(card, &a.draft, &ctx);
            let after = ctx.extended(card, a.draft.clone(), out.clone());
            let reward = if task.is_goal(&after) { 1.0 } else { 0.0 };
            steps.push(step(card, &a.draft, &ctx, out, reward));
            ctx = after;
        }
        let goal = task.is_goal(&ctx);
        last_run = (steps, ctx);
        if goal {
            break StopReason::GoalReached;
        }
        if cut {
            break StopReason::Budget;
        }
    };
    Ok(s.finish(last_run.0, last_run.1, reason))
}

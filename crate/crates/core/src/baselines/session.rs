use crate::evaluation::{score_post, Evaluator, PostRequest};
use crate::search::{
    Event, ExecutionCache, Executor, Meter, PlanningTask, SearchConfig, SearchError, SearchResult,
    StopReason, TrajectoryStep,
};
use crate::tool_model::{ArgumentDraft, Context, ToolCard, ToolOutput};

/// Bookkeeping shared by the step-wise planners.
pub(crate) struct Session<'a, T: ?Sized> {
    pub task: &'a T,
    pub executor: &'a dyn Executor,
    pub evaluator: &'a dyn Evaluator,
    pub cache: ExecutionCache,
    pub meter: Meter,
    pub events: Vec<Event>,
    pub expansions: usize,
}

impl<'a, T: PlanningTask + ?Sized> Session<'a, T> {
    pub fn new(
        task: &'a T,
        evaluator: &'a dyn Evaluator,
        executor: &'a dyn Executor,
        config: &SearchConfig,
    ) -> Self {
        Self {
            task,
            executor,
            evaluator,
            cache: ExecutionCache::new(),
            meter: Meter::new(config),
            events: Vec::new(),
            expansions: 0,
        }
    }

    /// Calls made through the cache, hits included.
    pub fn executions(&self) -> u64 {
        self.meter.counters.executor_calls + self.meter.counters.cache_hits
    }

    pub fn execute(
        &mut self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> ToolOutput {
        let (out, hit) = self
            .cache
            .execute_action(self.executor, card, draft, context);
        if hit {
            self.meter.counters.cache_hits += 1;
        } else {
            self.meter.counters.executor_calls += 1;
        }
        let step = self.executions() as usize;
        self.events.push(Event::Execute {
            rollout: step,
            node: step,
            tool: card.name.clone(),
            cache_hit: hit,
        });
        out
    }

    pub fn judge_post(
        &mut self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        before: &Context,
        output: &ToolOutput,
    ) -> Result<f64, SearchError> {
        self.meter.counters.post_judge_calls += 1;
        let req = PostRequest {
            context_before: before,
            card,
            draft,
            output,
        };
        Ok(score_post(&req, self.evaluator)?)
    }

    /// Packs a finished run. `steps` and `context` describe the returned
    /// trajectory.
    pub fn finish(
        self,
        steps: Vec<TrajectoryStep>,
        context: Context,
        stop_reason: StopReason,
    ) -> SearchResult {
        let best_value = if steps.is_empty() {
            0.0
        } else {
            steps.iter().map(|s| s.reward).sum::<f64>() / steps.len() as f64
        };
        SearchResult {
            success: self.task.is_goal(&context),
            best_trajectory: steps,
            best_value,
            final_context: context,
            rollouts_used: self.executions() as usize,
            nodes_expanded: self.expansions,
            stop_reason,
            counters: self.meter.counters,
            trace: Vec::new(),
            events: self.events,
            nodes: Vec::new(),
        }
    }
}

pub(crate) fn step(
    card: &ToolCard,
    draft: &ArgumentDraft,
    before: &Context,
    output: ToolOutput,
    reward: f64,
) -> TrajectoryStep {
    TrajectoryStep {
        tool: card.name.clone(),
        arguments: draft.resolve(before),
        output,
        reward,
    }
}

//! Scripted judges over a task's gold plan.
//!
//! [`OracleJudge`] knows the true plan and the true intermediate values.
//! [`ForecastJudge`] keeps the oracle's grounded post-execution scoring but
//! forecasts from tool identities only, the way a text-reading judge would:
//! a trap that advertises the step it imitates is believed to perform it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::evaluation::{EvalError, Evaluator, PostRequest, PreRequest};
use crate::tool_model::Context;

use super::task::{SyntheticTask, ToolRole};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeTiers {
    pub pre_on_plan: f64,
    pub pre_out_of_order: f64,
    pub pre_distractor: f64,
    /// Forecast given to a trap whose imitated step is next.
    pub pre_lure: f64,
    pub post_on_plan: f64,
    /// When set, an on-plan step scores `floor + (post_on_plan - floor) * k / n`
    /// where `k` of the `n` gold steps are done after it; the last step
    /// scores `post_on_plan`.
    pub post_progress_floor: Option<f64>,
    pub post_redundant: f64,
    pub post_off_plan: f64,
    pub post_error: f64,
}

impl JudgeTiers {
    /// Default tiers with progress-graded on-plan post scores.
    pub fn graded() -> Self {
        Self {
            post_progress_floor: Some(0.5),
            ..Self::default()
        }
    }
}

impl Default for JudgeTiers {
    fn default() -> Self {
        Self {
            pre_on_plan: 0.9,
            pre_out_of_order: 0.4,
            pre_distractor: 0.1,
            pre_lure: 0.95,
            post_on_plan: 0.9,
            post_progress_floor: None,
            post_redundant: 0.5,
            post_off_plan: 0.1,
            post_error: 0.0,
        }
    }
}

fn grounded_post(task: &SyntheticTask, tiers: &JudgeTiers, request: &PostRequest<'_>) -> f64 {
    if request.output.is_error() {
        return tiers.post_error;
    }
    let Some(ToolRole::Gold { step }) = task.role(&request.card.name) else {
        return tiers.post_off_plan;
    };
    let gold = &task.gold_plan[*step];
    if request.output.payload != gold.output {
        return tiers.post_off_plan;
    }
    let seen = request.context_before.history.iter().any(|h| {
        !h.output.is_error()
            && h.output
                .payload
                .values()
                .any(|v| gold.output.values().any(|g| g == v))
    });
    if seen {
        return tiers.post_redundant;
    }
    match tiers.post_progress_floor {
        None => tiers.post_on_plan,
        Some(floor) => {
            let mut done = steps_done(task, request.context_before);
            done.insert(*step);
            floor + (tiers.post_on_plan - floor) * done.len() as f64 / task.gold_plan.len() as f64
        }
    }
}

/// Judge with full knowledge of the gold plan and its values.
#[derive(Debug, Clone, Copy)]
pub struct OracleJudge<'a> {
    pub task: &'a SyntheticTask,
    pub tiers: JudgeTiers,
}

pub fn make_oracle_evaluator(task: &SyntheticTask) -> OracleJudge<'_> {
    OracleJudge {
        task,
        tiers: JudgeTiers::default(),
    }
}

/// Steps whose correct output is already in the context.
fn steps_done(task: &SyntheticTask, context: &Context) -> BTreeSet<usize> {
    task.gold_plan
        .iter()
        .enumerate()
        .filter(|(_, g)| {
            context
                .history
                .iter()
                .any(|h| !h.output.is_error() && h.output.payload == g.output)
        })
        .map(|(i, _)| i)
        .collect()
}

impl Evaluator for OracleJudge<'_> {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        let Some(ToolRole::Gold { step }) = self.task.role(&request.card.name) else {
            return Ok(self.tiers.pre_distractor);
        };
        let gold = &self.task.gold_plan[*step];
        let done = steps_done(self.task, request.context);
        let ready = !done.contains(step)
            && gold.deps.iter().all(|d| done.contains(d))
            && request.draft.resolve(request.context) == gold.args;
        Ok(if ready {
            self.tiers.pre_on_plan
        } else {
            self.tiers.pre_out_of_order
        })
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        Ok(grounded_post(self.task, &self.tiers, request))
    }
}

/// Judge that forecasts from tool identities and scores outcomes from
/// ground truth.
#[derive(Debug, Clone, Copy)]
pub struct ForecastJudge<'a> {
    pub task: &'a SyntheticTask,
    pub tiers: JudgeTiers,
}

pub fn make_forecast_evaluator(task: &SyntheticTask) -> ForecastJudge<'_> {
    ForecastJudge {
        task,
        tiers: JudgeTiers::default(),
    }
}

/// Steps the judge believes done: a gold tool or a trap imitating it ran
/// without an error token.
fn steps_believed_done(task: &SyntheticTask, context: &Context) -> BTreeSet<usize> {
    context
        .history
        .iter()
        .filter(|h| !h.output.is_error())
        .filter_map(|h| match task.role(&h.tool) {
            Some(ToolRole::Gold { step }) => Some(*step),
            Some(ToolRole::Trap { target }) => Some(*target),
            _ => None,
        })
        .collect()
}

impl Evaluator for ForecastJudge<'_> {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        let done = steps_believed_done(self.task, request.context);
        let next = |step: usize| {
            !done.contains(&step)
                && self.task.gold_plan[step]
                    .deps
                    .iter()
                    .all(|d| done.contains(d))
        };
        Ok(match self.task.role(&request.card.name) {
            Some(ToolRole::Gold { step }) if next(*step) => self.tiers.pre_on_plan,
            Some(ToolRole::Gold { .. }) => self.tiers.pre_out_of_order,
            Some(ToolRole::Trap { target }) if next(*target) => self.tiers.pre_lure,
            Some(ToolRole::Trap { .. }) => self.tiers.pre_out_of_order,
            _ => self.tiers.pre_distractor,
        })
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        Ok(grounded_post(self.task, &self.tiers, request))
    }
}

/// Which scripted judge a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    #[default]
    Forecast,
    Oracle,
}

/// Either scripted judge behind one type.
#[derive(Debug, Clone, Copy)]
pub enum ScriptedJudge<'a> {
    Forecast(ForecastJudge<'a>),
    Oracle(OracleJudge<'a>),
}

impl<'a> ScriptedJudge<'a> {
    pub fn new(kind: JudgeKind, task: &'a SyntheticTask, tiers: JudgeTiers) -> Self {
        match kind {
            JudgeKind::Forecast => Self::Forecast(ForecastJudge { task, tiers }),
            JudgeKind::Oracle => Self::Oracle(OracleJudge { task, tiers }),
        }
    }
}

impl Evaluator for ScriptedJudge<'_> {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        match self {
            Self::Forecast(j) => j.score_pre(request),
            Self::Oracle(j) => j.score_pre(request),
        }
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        match self {
            Self::Forecast(j) => j.score_post(request),
            Self::Oracle(j) => j.score_post(request),
        }
    }
}

/// True when `value` equals any output the gold plan produces.
pub fn is_gold_value(task: &SyntheticTask, value: &Value) -> bool {
    task.gold_plan
        .iter()
        .any(|g| g.output.values().any(|v| v == value))
}

use crate::tool_model::{ArgumentDraft, Context, ToolCard, ToolOutput};

use super::EvalError;

/// Inputs to a pre-execution judgment.
#[derive(Debug, Clone, Copy)]
pub struct PreRequest<'a> {
    pub context: &'a Context,
    pub card: &'a ToolCard,
    pub draft: &'a ArgumentDraft,
}

/// Inputs to a post-execution judgment of one executed call.
#[derive(Debug, Clone, Copy)]
pub struct PostRequest<'a> {
    pub context_before: &'a Context,
    pub card: &'a ToolCard,
    pub draft: &'a ArgumentDraft,
    pub output: &'a ToolOutput,
}

/// A judge producing pre- and post-execution scores.
///
/// Implementations are shared across concurrently running tasks and must
/// be stateless or internally synchronized.
pub trait Evaluator: Send + Sync {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError>;
    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        (**self).score_pre(request)
    }
    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        (**self).score_post(request)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        (**self).score_pre(request)
    }
    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        (**self).score_post(request)
    }
}

fn bounded(score: f64) -> Result<f64, EvalError> {
    if score.is_nan() {
        return Err(EvalError::MalformedVerdict("NaN score".into()));
    }
    Ok(score.clamp(0.0, 1.0))
}

/// Pre-execution score in `[0, 1]` from any backend.
pub fn score_pre(request: &PreRequest<'_>, evaluator: &dyn Evaluator) -> Result<f64, EvalError> {
    bounded(evaluator.score_pre(request)?)
}

/// Post-execution score in `[0, 1]` from any backend.
pub fn score_post(request: &PostRequest<'_>, evaluator: &dyn Evaluator) -> Result<f64, EvalError> {
    bounded(evaluator.score_post(request)?)
}

/// Judge with fixed scores, useful as a neutral prior.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEvaluator {
    pub pre: f64,
    pub post: f64,
}

impl Evaluator for ConstantEvaluator {
    fn score_pre(&self, _: &PreRequest<'_>) -> Result<f64, EvalError> {
        Ok(self.pre)
    }
    fn score_post(&self, _: &PostRequest<'_>) -> Result<f64, EvalError> {
        Ok(self.post)
    }
}

//! Judge contract, prompt rendering, verdict parsing, the HTTP judge client
//! and decision-noise injection.

mod evaluator;
mod noise;
mod prompts;
mod verdict;
mod wire;

pub use evaluator::{score_post, score_pre, ConstantEvaluator, Evaluator, PostRequest, PreRequest};
pub use noise::{
    inject_judge_noise, FlipMode, NoiseConfig, NoiseStats, NoisyEvaluator, Restoration,
};
pub use prompts::{
    render_context, render_output, render_post_prompt, render_pre_prompt, RenderedPrompt,
    EMPTY_CONTEXT_MARKER, TEMPLATE_VERSION,
};
pub use verdict::{parse_verdict, JudgeVerdict, ParsedVerdict};
pub use wire::{WireConfig, WireJudge};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("evaluator unavailable: {0}")]
    EvaluatorUnavailable(String),
    #[error("malformed verdict: {0}")]
    MalformedVerdict(String),
    #[error("noise error rate {0} outside [0, 1]")]
    InvalidNoise(f64),
}

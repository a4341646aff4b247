//! The tree search: prior-augmented UCT selection, judged expansion with
//! pre-pruning, cached execution, post-judged backup with post-pruning,
//! early stopping and best-trajectory extraction.

mod cache;
mod config;
mod engine;
mod result;
mod tree;

pub use cache::{execution_key, literal_draft, ExecFault, ExecutionCache, Executor, PlanningTask};
pub use config::SearchConfig;
pub use engine::{run_search, score_candidates, should_stop, ScoredAction};
pub use result::{
    Candidate, Counters, Event, Meter, NodeSummary, SearchResult, StopReason, TracePoint,
    TrajectoryStep,
};
pub use tree::{anneal_lambda, uct_score, Action, NodeId, SearchNode, SearchTree, ROOT};

use crate::evaluation::EvalError;
use crate::tool_model::ToolModelError;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("tree exhausted")]
    TreeExhausted,
    #[error("no rollout has completed")]
    EmptyTree,
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("tool `{0}` is not in the registry")]
    UnknownTool(String),
    #[error(transparent)]
    Evaluator(#[from] EvalError),
    #[error(transparent)]
    ToolModel(#[from] ToolModelError),
}

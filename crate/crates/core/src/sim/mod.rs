//! Synthetic tool world: generated tasks with gold plans, distractors and
//! traps, a deterministic tool executor, scripted judges and metrics.

mod generator;
mod judges;
mod metrics;
mod suite;
mod task;

pub use generator::{generate_suite, generate_task, GeneratorParams};
pub use judges::{
    is_gold_value, make_forecast_evaluator, make_oracle_evaluator, ForecastJudge, JudgeKind,
    JudgeTiers, OracleJudge, ScriptedJudge,
};
pub use metrics::{evaluate_success, set_f1, Metrics};
pub use suite::{read_suite, write_suite};
pub use task::{
    execute_sim_tool, Difficulty, FailureTrigger, GoldStep, SimTool, SyntheticTask, ToolRole,
    MISSING_DEPENDENCY,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("generated task is not solvable: {0}")]
    Unsolvable(String),
    #[error("suite line {line}: {message}")]
    SuiteParse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

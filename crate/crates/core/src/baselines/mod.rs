//! Reference planners sharing the search crate's tool model, evaluator
//! interface, executor and cache.

mod best_first;
mod dfs;
mod greedy;
mod session;

pub use best_first::run_best_first;
pub use dfs::run_dfs_backtrack;
pub use greedy::run_greedy;

use serde::{Deserialize, Serialize};

use crate::evaluation::Evaluator;
use crate::search::{run_search, Executor, PlanningTask, SearchConfig, SearchError, SearchResult};
use crate::tool_model::ToolRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    GreedyReactive,
    BestFirst,
    DfsBacktrack,
    VanillaMcts,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        Self::GreedyReactive,
        Self::BestFirst,
        Self::DfsBacktrack,
        Self::VanillaMcts,
    ];

    /// Runs this planner. `budget` bounds steps, expansions or executions
    /// for the step-wise planners and replaces `r_max` for vanilla MCTS.
    pub fn run<T: PlanningTask + ?Sized>(
        self,
        task: &T,
        registry: &ToolRegistry,
        evaluator: &dyn Evaluator,
        executor: &dyn Executor,
        budget: usize,
        config: &SearchConfig,
    ) -> Result<SearchResult, SearchError> {
        match self {
            Self::GreedyReactive => run_greedy(task, registry, evaluator, executor, budget, config),
            Self::BestFirst => run_best_first(task, registry, evaluator, executor, budget, config),
            Self::DfsBacktrack => {
                run_dfs_backtrack(task, registry, evaluator, executor, budget, config)
            }
            Self::VanillaMcts => {
                let cfg = SearchConfig {
                    r_max: budget,
                    ..config.clone()
                };
                run_vanilla_mcts(task, registry, evaluator, executor, &cfg)
            }
        }
    }
}

/// Plain UCT: the search engine with uniform priors and both prunings off.
pub fn run_vanilla_mcts<T: PlanningTask + ?Sized>(
    task: &T,
    registry: &ToolRegistry,
    evaluator: &dyn Evaluator,
    executor: &dyn Executor,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    run_search(task, registry, evaluator, executor, &config.vanilla())
}

#[cfg(test)]
pub(crate) mod worlds;

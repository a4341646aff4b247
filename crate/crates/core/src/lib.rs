//! Tool planning as Monte Carlo tree search with dual (pre/post execution)
//! evaluation, bidirectional pruning and deterministic execution caching.

pub mod baselines;
pub mod evaluation;
pub mod harness;
pub mod search;
pub mod sim;
pub mod tool_model;

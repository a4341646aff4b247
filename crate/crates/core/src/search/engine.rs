use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::evaluation::{score_post, score_pre, Evaluator, PostRequest, PreRequest};
use crate::tool_model::{draft_arguments, is_admissible, Context, ToolRegistry};

use super::cache::{ExecutionCache, Executor, PlanningTask};
use super::result::{
    Candidate, Event, Meter, NodeSummary, SearchResult, StopReason, TracePoint, TrajectoryStep,
};
use super::tree::{Action, NodeId, SearchTree};
use super::{SearchConfig, SearchError};

/// True once the budget is spent, the best value has stalled, or the tree
/// has nothing left to explore. `best_q` holds one entry per rollout.
pub fn should_stop(best_q: &[f64], exhausted: bool, config: &SearchConfig) -> bool {
    exhausted || best_q.len() >= config.r_max || stalled(best_q, config)
}

fn stalled(best_q: &[f64], config: &SearchConfig) -> bool {
    let w = config.early_stop_window;
    if best_q.len() < w + 1 {
        return false;
    }
    best_q[best_q.len() - w - 1..]
        .windows(2)
        .all(|p| p[1] - p[0] < config.early_stop_epsilon)
}

/// A scored expansion candidate.
#[derive(Debug, Clone)]
pub struct ScoredAction {
    pub action: Action,
    pub prior: f64,
}

/// Scores every admissible tool not yet used on this path, ranked by prior
/// (ties by name). Also reports how many judge calls were made.
pub fn score_candidates(
    context: &Context,
    registry: &ToolRegistry,
    evaluator: &dyn Evaluator,
    use_prior: bool,
) -> Result<(Vec<ScoredAction>, u64), SearchError> {
    score_candidates_except(context, registry, evaluator, use_prior, &BTreeSet::new())
}

fn score_candidates_except(
    context: &Context,
    registry: &ToolRegistry,
    evaluator: &dyn Evaluator,
    use_prior: bool,
    skip: &BTreeSet<String>,
) -> Result<(Vec<ScoredAction>, u64), SearchError> {
    let used: BTreeSet<&str> = context.tools_used().collect();
    let mut out = Vec::new();
    let mut calls = 0;
    for card in registry.cards() {
        if used.contains(card.name.as_str())
            || skip.contains(&card.name)
            || !is_admissible(context, card)
        {
            continue;
        }
        let draft = draft_arguments(context, card)?;
        let prior = if use_prior {
            calls += 1;
            score_pre(
                &PreRequest {
                    context,
                    card,
                    draft: &draft,
                },
                evaluator,
            )?
        } else {
            1.0
        };
        out.push(ScoredAction {
            action: Action {
                tool: card.name.clone(),
                draft,
            },
            prior,
        });
    }
    // registry iterates by name, so a stable sort keeps name order on ties
    out.sort_by(|a, b| b.prior.total_cmp(&a.prior));
    Ok((out, calls))
}

struct Engine<'a, T: ?Sized> {
    task: &'a T,
    registry: &'a ToolRegistry,
    evaluator: &'a dyn Evaluator,
    executor: &'a dyn Executor,
    config: &'a SearchConfig,
    tree: SearchTree,
    cache: ExecutionCache,
    rng: ChaCha8Rng,
    meter: Meter,
    events: Vec<Event>,
    trace: Vec<TracePoint>,
    best_q: Vec<f64>,
}

impl<'a, T: PlanningTask + ?Sized> Engine<'a, T> {
    fn rollout_index(&self) -> usize {
        self.trace.len() + 1
    }

    fn close(&mut self, node: NodeId, reason: &str) {
        self.tree.node_mut(node).expandable = false;
        self.events.push(Event::Close {
            rollout: self.rollout_index(),
            node,
            reason: reason.into(),
        });
    }

    /// Scores the admissible actions that are not yet children of `leaf`
    /// and instantiates the kept ones.
    fn expand(&mut self, leaf: NodeId) -> Result<Vec<NodeId>, SearchError> {
        let existing: BTreeSet<String> = self
            .tree
            .node(leaf)
            .children
            .iter()
            .filter_map(|&c| self.tree.node(c).action.as_ref().map(|a| a.tool.clone()))
            .collect();
        let (scored, calls) = score_candidates_except(
            &self.tree.node(leaf).context,
            self.registry,
            self.evaluator,
            self.config.pre_eval,
            &existing,
        )?;
        self.meter.counters.pre_judge_calls += calls;
        let top_k = if self.config.pre_eval {
            self.config.top_k
        } else {
            None
        };
        let mut kept = 0usize;
        let mut candidates = Vec::with_capacity(scored.len());
        let mut children = Vec::new();
        for s in scored {
            let keep = (!self.config.pre_eval || s.prior >= self.config.tau_pre)
                && top_k.map_or(true, |k| kept < k);
            let node = if keep {
                kept += 1;
                let id = self.tree.add_child(leaf, s.action.clone(), s.prior);
                children.push(id);
                Some(id)
            } else {
                None
            };
            candidates.push(Candidate {
                tool: s.action.tool,
                prior: s.prior,
                node,
            });
        }
        self.events.push(Event::Expand {
            rollout: self.rollout_index(),
            node: leaf,
            candidates,
        });
        Ok(children)
    }

    fn execute_and_backup(&mut self, id: NodeId) -> Result<(), SearchError> {
        let rollout = self.rollout_index();
        let node = self.tree.node(id);
        let action = node.action.clone().expect("non-root node");
        let before = node.context.clone();
        let depth = node.depth;
        let card = self
            .registry
            .get(&action.tool)
            .ok_or_else(|| SearchError::UnknownTool(action.tool.clone()))?;
        let (output, hit) = self
            .cache
            .execute_action(self.executor, card, &action.draft, &before);
        if hit {
            self.meter.counters.cache_hits += 1;
        } else {
            self.meter.counters.executor_calls += 1;
        }
        self.events.push(Event::Execute {
            rollout,
            node: id,
            tool: action.tool.clone(),
            cache_hit: hit,
        });
        let after = before.extended(card, action.draft.clone(), output.clone());
        let goal = self.task.is_goal(&after);
        self.meter.counters.post_judge_calls += 1;
        let reward = if self.config.post_eval {
            let req = PostRequest {
                context_before: &before,
                card,
                draft: &action.draft,
                output: &output,
            };
            score_post(&req, self.evaluator)?
        } else if goal {
            1.0
        } else {
            0.0
        };
        {
            let n = self.tree.node_mut(id);
            n.context = after;
            n.output = Some(output);
            n.last_reward = Some(reward);
            n.goal = goal;
            n.terminal = goal || depth >= self.config.max_depth;
        }
        if self.config.post_eval
            && self
                .tree
                .apply_post_pruning(id, reward, self.config.tau_post)
        {
            self.events.push(Event::PostPrune {
                rollout,
                node: id,
                reward,
            });
        }
        if self.tree.node(id).terminal && self.tree.node(id).expandable {
            self.close(id, "terminal");
        }
        self.tree.backpropagate(id, reward);
        let path = self.tree.path_to_root(id);
        self.events.push(Event::Backup {
            rollout,
            path,
            reward,
        });
        Ok(())
    }

    /// Highest Q over every visited node of the tree.
    fn current_best_q(&self) -> f64 {
        self.tree
            .nodes
            .iter()
            .skip(1)
            .filter(|n| n.visits > 0)
            .map(|n| n.value)
            .fold(0.0, f64::max)
    }

    fn run(mut self) -> Result<SearchResult, SearchError> {
        let stop_reason = loop {
            if self.best_q.len() >= self.config.r_max {
                break StopReason::Budget;
            }
            if stalled(&self.best_q, self.config) {
                break StopReason::EarlyStop;
            }
            let leaf = match self.tree.select_path(
                self.config.lambda,
                self.config.anneal_lambda,
                self.config.jitter_magnitude,
                &mut self.rng,
            ) {
                Ok(l) => l,
                Err(SearchError::TreeExhausted) => break StopReason::TreeExhausted,
                Err(e) => return Err(e),
            };
            let node = self.tree.node(leaf);
            let target = if node.action.is_some() && !node.is_executed() {
                leaf
            } else if node.expandable && !node.terminal {
                let fresh = node.children.is_empty();
                match self.expand(leaf)?.first() {
                    Some(&c) => c,
                    None => {
                        self.close(leaf, if fresh { "no_candidates" } else { "exhausted" });
                        continue;
                    }
                }
            } else {
                self.close(leaf, "exhausted");
                continue;
            };
            self.execute_and_backup(target)?;
            let q = self.current_best_q();
            self.best_q.push(q);
            self.trace.push(TracePoint {
                rollout: self.best_q.len(),
                best_q: q,
                elapsed_s: self.meter.elapsed_s(),
            });
        };
        self.finish(stop_reason)
    }

    fn finish(self, stop_reason: StopReason) -> Result<SearchResult, SearchError> {
        let tree = &self.tree;
        let (steps, best_value, final_context) = match tree.best_path() {
            Ok(path) => {
                let steps: Vec<TrajectoryStep> = path
                    .iter()
                    .map(|&i| {
                        let n = tree.node(i);
                        let action = n.action.as_ref().unwrap();
                        let before = &tree.node(n.parent.unwrap()).context;
                        TrajectoryStep {
                            tool: action.tool.clone(),
                            arguments: action.draft.resolve(before),
                            output: n.output.clone().unwrap(),
                            reward: n.last_reward.unwrap_or(0.0),
                        }
                    })
                    .collect();
                let mean =
                    path.iter().map(|&i| tree.node(i).value).sum::<f64>() / path.len() as f64;
                (
                    steps,
                    mean,
                    tree.node(*path.last().unwrap()).context.clone(),
                )
            }
            Err(_) => (Vec::new(), 0.0, tree.root().context.clone()),
        };
        let nodes = tree
            .nodes
            .iter()
            .map(|n| NodeSummary {
                id: n.id,
                parent: n.parent,
                tool: n.action.as_ref().map(|a| a.tool.clone()),
                depth: n.depth,
                visits: n.visits,
                value: n.value,
                prior: n.prior,
                expandable: n.expandable,
                terminal: n.terminal,
                children: n.children.clone(),
            })
            .collect();
        Ok(SearchResult {
            success: self.task.is_goal(&final_context),
            best_trajectory: steps,
            best_value,
            final_context,
            rollouts_used: self.trace.len(),
            nodes_expanded: tree.len() - 1,
            stop_reason,
            counters: self.meter.counters,
            trace: self.trace,
            events: self.events,
            nodes,
        })
    }
}

/// Runs the tree search on one task.
pub fn run_search<T: PlanningTask + ?Sized>(
    task: &T,
    registry: &ToolRegistry,
    evaluator: &dyn Evaluator,
    executor: &dyn Executor,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    if registry.is_empty() {
        return Err(SearchError::EmptyRegistry);
    }
    let engine = Engine {
        task,
        registry,
        evaluator,
        executor,
        config,
        tree: SearchTree::new(Context::new(task.query().clone())),
        cache: ExecutionCache::new(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        meter: Meter::new(config),
        events: Vec::new(),
        trace: Vec::new(),
        best_q: Vec::new(),
    };
    engine.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    #[test]
    fn flat_window_stops() {
        let mut t = vec![0.1, 0.2];
        t.extend(std::iter::repeat(0.5).take(11));
        assert!(!should_stop(&t[..12], false, &cfg()));
        assert!(should_stop(&t, false, &cfg()));
    }

    #[test]
    fn late_increase_resets_window() {
        let mut t: Vec<f64> = std::iter::repeat(0.5).take(10).collect();
        t.push(0.51);
        assert!(!should_stop(&t, false, &cfg()));
    }

    #[test]
    fn budget_and_exhaustion_stop() {
        let t: Vec<f64> = (0..60).map(|i| i as f64 * 0.01).collect();
        assert!(should_stop(&t, false, &cfg()));
        assert!(!should_stop(&t[..59], false, &cfg()));
        assert!(should_stop(&[], true, &cfg()));
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::tool_model::{Context, ToolOutput};

use super::tree::NodeId;
use super::SearchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    EarlyStop,
    TreeExhausted,
    /// Used by sequential planners that halt as soon as the goal holds.
    GoalReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub tool: String,
    pub arguments: BTreeMap<String, Value>,
    pub output: ToolOutput,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub rollout: usize,
    pub best_q: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub executor_calls: u64,
    pub cache_hits: u64,
    pub pre_judge_calls: u64,
    pub post_judge_calls: u64,
}

impl Counters {
    pub fn judge_calls(&self) -> u64 {
        self.pre_judge_calls + self.post_judge_calls
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub tool: String,
    pub prior: f64,
    /// Child id when kept, `None` when dropped before instantiation.
    pub node: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Expand {
        rollout: usize,
        node: NodeId,
        /// Every scored candidate in rank order; dropped ones have no node.
        candidates: Vec<Candidate>,
    },
    Execute {
        rollout: usize,
        node: NodeId,
        tool: String,
        cache_hit: bool,
    },
    PostPrune {
        rollout: usize,
        node: NodeId,
        reward: f64,
    },
    /// The node can no longer grow: it is terminal, expansion found no
    /// candidates, or its subtree is used up.
    Close {
        rollout: usize,
        node: NodeId,
        reason: String,
    },
    Backup {
        rollout: usize,
        path: Vec<NodeId>,
        reward: f64,
    },
}

/// Final statistics of one tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub tool: Option<String>,
    pub depth: usize,
    pub visits: u64,
    pub value: f64,
    pub prior: f64,
    pub expandable: bool,
    pub terminal: bool,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_trajectory: Vec<TrajectoryStep>,
    pub best_value: f64,
    /// Goal predicate on the context the best trajectory ends in.
    pub success: bool,
    pub final_context: Context,
    pub rollouts_used: usize,
    pub nodes_expanded: usize,
    pub stop_reason: StopReason,
    pub counters: Counters,
    pub trace: Vec<TracePoint>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub nodes: Vec<NodeSummary>,
}

impl SearchResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    /// Action paths (tool names from the root) of every node that was
    /// expanded, i.e. had candidates scored under it.
    pub fn expanded_paths(&self) -> BTreeSet<Vec<String>> {
        let by_id: BTreeMap<NodeId, &NodeSummary> = self.nodes.iter().map(|n| (n.id, n)).collect();
        let path = |mut id: NodeId| {
            let mut names = Vec::new();
            while let Some(n) = by_id.get(&id) {
                if let Some(t) = &n.tool {
                    names.push(t.clone());
                }
                match n.parent {
                    Some(p) => id = p,
                    None => break,
                }
            }
            names.reverse();
            names
        };
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Expand { node, .. } => Some(path(*node)),
                _ => None,
            })
            .collect()
    }

    /// Rechecks the engine invariants from the node table and event log.
    pub fn audit(&self, config: &SearchConfig) -> Result<(), String> {
        if self.rollouts_used > config.r_max {
            return Err(format!(
                "{} rollouts exceed r_max {}",
                self.rollouts_used, config.r_max
            ));
        }
        if self.trace.len() != self.rollouts_used {
            return Err("trace length differs from rollouts used".into());
        }
        if self.counters.executor_calls > self.nodes_expanded as u64 {
            return Err("more executor calls than nodes".into());
        }
        if self.nodes.is_empty() {
            return Ok(());
        }
        // visit conservation: root equals the sum over its children, other
        // nodes add the rollouts that ended on them
        let mut ended: BTreeMap<NodeId, u64> = BTreeMap::new();
        let mut rewards: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
        let mut closed: BTreeSet<NodeId> = BTreeSet::new();
        for e in &self.events {
            match e {
                Event::Backup { path, reward, .. } => {
                    *ended.entry(path[0]).or_default() += 1;
                    for &n in path {
                        rewards.entry(n).or_default().push(*reward);
                    }
                }
                Event::PostPrune { node, .. } | Event::Close { node, .. } => {
                    closed.insert(*node);
                }
                Event::Expand {
                    node, candidates, ..
                } => {
                    if closed.contains(node) && candidates.iter().any(|c| c.node.is_some()) {
                        return Err(format!("node {node} expanded after being closed"));
                    }
                }
                Event::Execute { .. } => {}
            }
        }
        let by_id: BTreeMap<NodeId, &NodeSummary> = self.nodes.iter().map(|n| (n.id, n)).collect();
        for n in &self.nodes {
            let child_sum: u64 = n.children.iter().map(|c| by_id[c].visits).sum();
            let own = if n.parent.is_none() {
                0
            } else {
                ended.get(&n.id).copied().unwrap_or(0)
            };
            if n.visits != child_sum + own {
                return Err(format!(
                    "node {} visits {} != {} + {}",
                    n.id, n.visits, child_sum, own
                ));
            }
            let rs = rewards.get(&n.id).map(Vec::as_slice).unwrap_or(&[]);
            if rs.len() as u64 != n.visits {
                return Err(format!(
                    "node {} has {} backups for {} visits",
                    n.id,
                    rs.len(),
                    n.visits
                ));
            }
            if !rs.is_empty() {
                let mean = rs.iter().sum::<f64>() / rs.len() as f64;
                if (mean - n.value).abs() > 1e-12 {
                    return Err(format!("node {} value {} != mean {}", n.id, n.value, mean));
                }
            }
            if !n.expandable && !closed.contains(&n.id) {
                return Err(format!("node {} closed without an event", n.id));
            }
        }
        Ok(())
    }
}

/// Cost clock. By default time is modelled from call counts so that
/// reports are reproducible; the wall clock is available on request.
#[derive(Debug, Clone)]
pub struct Meter {
    start: Instant,
    wall: bool,
    exec_cost_s: f64,
    judge_cost_s: f64,
    pub counters: Counters,
}

impl Meter {
    pub fn new(config: &SearchConfig) -> Self {
        Self {
            start: Instant::now(),
            wall: config.wall_clock,
            exec_cost_s: config.exec_cost_s,
            judge_cost_s: config.judge_cost_s,
            counters: Counters::default(),
        }
    }

    pub fn elapsed_s(&self) -> f64 {
        if self.wall {
            self.start.elapsed().as_secs_f64()
        } else {
            self.counters.executor_calls as f64 * self.exec_cost_s
                + self.counters.judge_calls() as f64 * self.judge_cost_s
        }
    }
}

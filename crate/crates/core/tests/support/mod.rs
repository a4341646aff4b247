#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde_json::json;

use tooltree::evaluation::{EvalError, Evaluator, PostRequest, PreRequest};
use tooltree::search::{
    execution_key, Event, ExecFault, Executor, PlanningTask, SearchResult, ROOT,
};
use tooltree::sim::{generate_suite, GeneratorParams, SyntheticTask};
use tooltree::tool_model::{
    ArgumentDraft, Context, Query, SchemaType, ToolCard, ToolOutput, ToolRegistry,
};

/// A single-file world: `step_01 -> step_02 -> ...`, each step consuming the
/// previous one's output type, so exactly one new tool is admissible after
/// each call. Post rewards are scripted per step.
pub struct Chain {
    pub query: Query,
    pub rewards: Vec<f64>,
    pub prior: f64,
}

fn link(k: usize) -> SchemaType {
    SchemaType::structured([(format!("v{k}"), SchemaType::Text)])
}

pub fn step_name(k: usize) -> String {
    format!("step_{k:02}")
}

fn step_index(name: &str) -> usize {
    name.trim_start_matches("step_")
        .parse()
        .expect("chain tool")
}

impl Chain {
    pub fn new(rewards: Vec<f64>) -> Self {
        Self {
            query: Query::text("walk the chain"),
            rewards,
            prior: 0.9,
        }
    }

    pub fn registry(&self) -> ToolRegistry {
        let cards = (1..=self.rewards.len()).map(|k| {
            let card = ToolCard::new(step_name(k), format!("chain step {k}"));
            let card = if k == 1 {
                card.input("text", SchemaType::Text)
            } else {
                card.input(format!("in{k}"), link(k - 1))
            };
            card.output(format!("out{k}"), link(k))
        });
        ToolRegistry::from_cards(cards).unwrap()
    }
}

impl PlanningTask for Chain {
    fn query(&self) -> &Query {
        &self.query
    }

    fn is_goal(&self, _: &Context) -> bool {
        false
    }
}

impl Executor for Chain {
    fn execute(
        &self,
        card: &ToolCard,
        _: &ArgumentDraft,
        _: &Context,
    ) -> Result<ToolOutput, ExecFault> {
        let k = step_index(&card.name);
        Ok(ToolOutput::ok(
            [(
                format!("out{k}"),
                json!({ format!("v{k}"): format!("value {k}") }),
            )]
            .into(),
        ))
    }
}

impl Evaluator for Chain {
    fn score_pre(&self, _: &PreRequest<'_>) -> Result<f64, EvalError> {
        Ok(self.prior)
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        Ok(self.rewards[step_index(&request.card.name) - 1])
    }
}

/// Wraps an executor and counts invocations per cache key.
pub struct Counting<'a, X> {
    pub inner: &'a X,
    pub calls: Mutex<BTreeMap<String, u64>>,
}

impl<'a, X> Counting<'a, X> {
    pub fn new(inner: &'a X) -> Self {
        Self {
            inner,
            calls: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn max_per_key(&self) -> u64 {
        self.calls
            .lock()
            .unwrap()
            .values()
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.calls.lock().unwrap().values().sum()
    }
}

impl<X: Executor> Executor for Counting<'_, X> {
    fn execute(
        &self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> Result<ToolOutput, ExecFault> {
        *self
            .calls
            .lock()
            .unwrap()
            .entry(execution_key(&card.name, draft, context))
            .or_default() += 1;
        self.inner.execute(card, draft, context)
    }
}

pub fn default_suite() -> Vec<SyntheticTask> {
    generate_suite(&GeneratorParams::default(), 200).unwrap()
}

/// Recomputes visits and means from the backup log and compares them with
/// the node table. Returns the first discrepancy.
pub fn replay_backups(result: &SearchResult, tolerance: f64) -> Result<(), String> {
    let mut sums: BTreeMap<usize, (u64, f64)> = BTreeMap::new();
    let mut ended: BTreeMap<usize, u64> = BTreeMap::new();
    for e in &result.events {
        if let Event::Backup { path, reward, .. } = e {
            *ended.entry(path[0]).or_default() += 1;
            for &id in path {
                let s = sums.entry(id).or_default();
                s.0 += 1;
                s.1 += reward;
            }
        }
    }
    let visits: BTreeMap<usize, u64> = result.nodes.iter().map(|n| (n.id, n.visits)).collect();
    for n in &result.nodes {
        let (count, total) = sums.get(&n.id).copied().unwrap_or((0, 0.0));
        if count != n.visits {
            return Err(format!(
                "node {}: {} visits, {} backups",
                n.id, n.visits, count
            ));
        }
        if count > 0 && ((total / count as f64) - n.value).abs() > tolerance {
            return Err(format!(
                "node {}: mean {} vs running {}",
                n.id,
                total / count as f64,
                n.value
            ));
        }
        let below: u64 = n.children.iter().map(|c| visits[c]).sum();
        let own = if n.id == ROOT {
            0
        } else {
            ended.get(&n.id).copied().unwrap_or(0)
        };
        if n.visits != below + own {
            return Err(format!(
                "node {}: {} != {} below + {} own",
                n.id, n.visits, below, own
            ));
        }
    }
    Ok(())
}

/// Number of expansions logged for nodes that had already been closed or
/// post-pruned.
pub fn expansions_after_close(result: &SearchResult) -> usize {
    let mut closed = BTreeSet::new();
    let mut bad = 0;
    for e in &result.events {
        match e {
            Event::Close { node, .. } | Event::PostPrune { node, .. } => {
                closed.insert(*node);
            }
            Event::Expand { node, .. } if closed.contains(node) => bad += 1,
            _ => {}
        }
    }
    bad
}

/// Tool-name path from the root of every node in the tree.
pub fn node_paths(result: &SearchResult) -> BTreeSet<Vec<String>> {
    let by_id: BTreeMap<usize, &tooltree::search::NodeSummary> =
        result.nodes.iter().map(|n| (n.id, n)).collect();
    result
        .nodes
        .iter()
        .map(|n| {
            let mut names = Vec::new();
            let mut cur = Some(n.id);
            while let Some(id) = cur {
                let node = by_id[&id];
                names.extend(node.tool.clone());
                cur = node.parent;
            }
            names.reverse();
            names
        })
        .collect()
}

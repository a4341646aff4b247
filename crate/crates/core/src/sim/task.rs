use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::search::{ExecFault, Executor, PlanningTask};
use crate::tool_model::{
    ArgumentDraft, Context, Query, SchemaType, ToolCard, ToolOutput, ToolRegistry,
};

/// How a tool relates to the task's gold plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToolRole {
    Gold {
        step: usize,
    },
    /// Mimics gold step `target` (same inputs and output type) but returns
    /// a wrong value.
    Trap {
        target: usize,
    },
    Plain,
}

/// Deterministic failure behaviour of a simulated tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureTrigger {
    Always {
        token: String,
    },
    /// Each listed input field must carry a value produced by the named
    /// tool; otherwise the call fails with `missing_dependency`.
    MissingDependency {
        requires: BTreeMap<String, String>,
    },
}

pub const MISSING_DEPENDENCY: &str = "missing_dependency";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTool {
    pub card: ToolCard,
    pub role: ToolRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureTrigger>,
    /// Fixed payload returned instead of the hashed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStep {
    pub tool: String,
    /// Indices of the gold steps whose outputs this step consumes.
    pub deps: Vec<usize>,
    pub args: BTreeMap<String, Value>,
    pub output: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Difficulty {
    pub chain_depth: usize,
    pub branching: usize,
    pub distractors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub task_id: String,
    pub query: Query,
    pub salt: u64,
    /// Tools visible to the planner, sorted by name.
    pub tools: Vec<SimTool>,
    /// Gold steps in canonical topological order.
    pub gold_plan: Vec<GoldStep>,
    /// The value whose appearance in any successful output meets the goal.
    pub answer: Value,
    pub difficulty: Difficulty,
}

fn hash_hex(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Runs one simulated tool. Pure in `(tool, salt, resolved arguments)`.
pub fn execute_sim_tool(
    tool: &SimTool,
    salt: u64,
    draft: &ArgumentDraft,
    context: &Context,
) -> ToolOutput {
    let args = draft.resolve(context);
    match &tool.failure {
        Some(FailureTrigger::Always { token }) => return ToolOutput::error(token.clone()),
        Some(FailureTrigger::MissingDependency { requires }) => {
            for (field, producer) in requires {
                let prefix = format!("{producer}:");
                let ok = args
                    .get(field)
                    .and_then(Value::as_str)
                    .is_some_and(|v| v.starts_with(&prefix));
                if !ok {
                    return ToolOutput::error(MISSING_DEPENDENCY);
                }
            }
        }
        None => {}
    }
    if let Some(c) = &tool.constant {
        return ToolOutput::ok(c.clone());
    }
    let args_json = serde_json::to_string(&args).expect("args serialize");
    let name = &tool.card.name;
    let payload = tool
        .card
        .outputs
        .iter()
        .map(|f| {
            let digest = hash_hex(&[
                &salt.to_le_bytes(),
                name.as_bytes(),
                f.name.as_bytes(),
                args_json.as_bytes(),
            ]);
            let value = match f.ty {
                SchemaType::Number => {
                    let n = u64::from_le_bytes(digest[..8].try_into().unwrap());
                    Value::from(1_000 + n % 9_000)
                }
                SchemaType::Boolean => Value::Bool(digest[0] & 1 == 1),
                _ => {
                    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
                    Value::String(format!("{name}:{hex}"))
                }
            };
            (f.name.clone(), value)
        })
        .collect();
    ToolOutput::ok(payload)
}

impl SyntheticTask {
    pub fn registry(&self) -> ToolRegistry {
        ToolRegistry::from_cards(self.tools.iter().map(|t| t.card.clone()))
            .expect("task tools are valid")
    }

    pub fn tool(&self, name: &str) -> Option<&SimTool> {
        self.tools
            .binary_search_by(|t| t.card.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.tools[i])
    }

    pub fn role(&self, name: &str) -> Option<&ToolRole> {
        self.tool(name).map(|t| &t.role)
    }

    pub fn gold_tools(&self) -> impl Iterator<Item = &str> {
        self.gold_plan.iter().map(|s| s.tool.as_str())
    }

    pub fn initial_context(&self) -> Context {
        Context::new(self.query.clone())
    }

    /// Goal check: some successful output carries the answer.
    pub fn goal_reached(&self, context: &Context) -> bool {
        context
            .history
            .iter()
            .filter(|h| !h.output.is_error())
            .any(|h| h.output.payload.values().any(|v| *v == self.answer))
    }

    /// Every topological order of the gold dependency graph.
    pub fn gold_orders(&self) -> Vec<Vec<usize>> {
        fn rec(task: &SyntheticTask, done: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if done.len() == task.gold_plan.len() {
                out.push(done.clone());
                return;
            }
            for (i, s) in task.gold_plan.iter().enumerate() {
                if !done.contains(&i) && s.deps.iter().all(|d| done.contains(d)) {
                    done.push(i);
                    rec(task, done, out);
                    done.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(self, &mut Vec::new(), &mut out);
        out
    }
}

impl PlanningTask for SyntheticTask {
    fn query(&self) -> &Query {
        &self.query
    }

    fn is_goal(&self, context: &Context) -> bool {
        self.goal_reached(context)
    }

    fn answer_type(&self) -> Option<SchemaType> {
        Some(SchemaType::Number)
    }
}

impl Executor for SyntheticTask {
    fn execute(
        &self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> Result<ToolOutput, ExecFault> {
        let tool = self
            .tool(&card.name)
            .ok_or_else(|| ExecFault::new("unknown_tool"))?;
        Ok(execute_sim_tool(tool, self.salt, draft, context))
    }
}

//! Hand-built miniature worlds for planner tests.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::evaluation::{EvalError, Evaluator, PostRequest, PreRequest};
use crate::search::{ExecFault, Executor, PlanningTask};
use crate::tool_model::{
    ArgumentDraft, Context, Query, SchemaType, ToolCard, ToolOutput, ToolRegistry,
};

type Behaviour = fn(&str, &BTreeMap<String, Value>) -> ToolOutput;

pub struct World {
    pub query: Query,
    pub cards: Vec<ToolCard>,
    pub priors: BTreeMap<String, f64>,
    pub posts: BTreeMap<String, f64>,
    pub behaviour: Behaviour,
    pub answer: Value,
}

pub struct StaticJudge<'a>(&'a World);

impl World {
    pub fn registry(&self) -> ToolRegistry {
        ToolRegistry::from_cards(self.cards.clone()).unwrap()
    }

    pub fn judge(&self) -> StaticJudge<'_> {
        StaticJudge(self)
    }
}

impl Evaluator for StaticJudge<'_> {
    fn score_pre(&self, r: &PreRequest<'_>) -> Result<f64, EvalError> {
        Ok(self.0.priors[&r.card.name])
    }

    fn score_post(&self, r: &PostRequest<'_>) -> Result<f64, EvalError> {
        Ok(if r.output.is_error() {
            0.0
        } else {
            self.0.posts[&r.card.name]
        })
    }
}

impl PlanningTask for World {
    fn query(&self) -> &Query {
        &self.query
    }

    fn is_goal(&self, ctx: &Context) -> bool {
        ctx.history
            .iter()
            .any(|h| !h.output.is_error() && h.output.payload.values().any(|v| *v == self.answer))
    }

    fn answer_type(&self) -> Option<SchemaType> {
        Some(SchemaType::Number)
    }
}

impl Executor for World {
    fn execute(
        &self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        ctx: &Context,
    ) -> Result<ToolOutput, ExecFault> {
        Ok((self.behaviour)(&card.name, &draft.resolve(ctx)))
    }
}

fn ty(name: &str) -> SchemaType {
    SchemaType::structured([(format!("{name}_value"), SchemaType::Text)])
}

fn single(field: &str, v: Value) -> ToolOutput {
    ToolOutput::ok(BTreeMap::from([(field.to_string(), v)]))
}

fn table(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `lure` imitates `a` and ranks first; `b` only works on `a`'s value.
pub fn lure_world() -> World {
    World {
        query: Query::text("find the total"),
        cards: vec![
            ToolCard::new("lure", "x")
                .input("q", SchemaType::Text)
                .output("mid", ty("mid")),
            ToolCard::new("a", "x")
                .input("q", SchemaType::Text)
                .output("mid", ty("mid")),
            ToolCard::new("b", "x")
                .input("mid", ty("mid"))
                .output("total", SchemaType::Number),
        ],
        priors: table(&[("lure", 0.95), ("b", 0.8), ("a", 0.5)]),
        posts: table(&[("lure", 0.1), ("a", 0.9), ("b", 0.9)]),
        behaviour: |tool, args| match tool {
            "lure" => single("mid", json!("lure:1")),
            "a" => single("mid", json!("a:1")),
            _ if args.get("mid") == Some(&json!("a:1")) => single("total", json!(42)),
            _ => ToolOutput::error("missing_dependency"),
        },
        answer: json!(42),
    }
}

/// Chain `a -> b -> c` with priors decreasing along it and one weak
/// distractor `d`.
pub fn aligned_world() -> World {
    World {
        query: Query::text("find the total"),
        cards: vec![
            ToolCard::new("a", "x")
                .input("q", SchemaType::Text)
                .output("x", ty("x")),
            ToolCard::new("b", "x")
                .input("x", ty("x"))
                .output("y", ty("y")),
            ToolCard::new("c", "x")
                .input("y", ty("y"))
                .output("total", SchemaType::Number),
            ToolCard::new("d", "x")
                .input("q", SchemaType::Text)
                .output("junk", ty("junk")),
        ],
        priors: table(&[("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.2)]),
        posts: table(&[("a", 0.9), ("b", 0.9), ("c", 0.9), ("d", 0.1)]),
        behaviour: |tool, _| match tool {
            "a" => single("x", json!("a:1")),
            "b" => single("y", json!("b:1")),
            "c" => single("total", json!(7)),
            _ => single("junk", json!("d:1")),
        },
        answer: json!(7),
    }
}

/// `x` looks best but leads nowhere; `g1 -> g2` reaches the goal.
pub fn branch_world() -> World {
    World {
        query: Query::text("find the total"),
        cards: vec![
            ToolCard::new("x", "x")
                .input("q", SchemaType::Text)
                .output("xo", ty("xo")),
            ToolCard::new("g1", "x")
                .input("q", SchemaType::Text)
                .output("g", ty("g")),
            ToolCard::new("g2", "x")
                .input("g", ty("g"))
                .output("total", SchemaType::Number),
        ],
        priors: table(&[("x", 0.9), ("g1", 0.6), ("g2", 0.9)]),
        posts: table(&[("x", 0.1), ("g1", 0.9), ("g2", 0.9)]),
        behaviour: |tool, _| match tool {
            "x" => single("xo", json!("x:1")),
            "g1" => single("g", json!("g1:1")),
            _ => single("total", json!(5)),
        },
        answer: json!(5),
    }
}

/// Every call fails.
pub fn broken_world() -> World {
    World {
        behaviour: |_, _| ToolOutput::error("tool_unavailable"),
        ..aligned_world()
    }
}

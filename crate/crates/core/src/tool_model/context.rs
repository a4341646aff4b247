//! Planning context: the query, its attachments, and the ordered record of
//! executed calls.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::card::ToolCard;
use super::schema::SchemaType;

/// A typed input that arrives with the query (an image or audio reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub ty: SchemaType,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Query {
    pub text: String,
    #[serde(default)]
    pub attachments: Vec<Attachment>,
}

impl Query {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            attachments: Vec::new(),
        }
    }

    pub fn with_attachment(mut self, ty: SchemaType, value: impl Into<Value>) -> Self {
        self.attachments.push(Attachment {
            ty,
            value: value.into(),
        });
        self
    }
}

/// Where a bound argument value comes from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueRef {
    /// The literal query text.
    Query,
    Attachment(usize),
    /// Output field `field` of history entry `entry`.
    Output {
        entry: usize,
        field: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Literal(Value),
    Ref(ValueRef),
}

/// Concrete bindings for a tool's input fields, keyed (and therefore
/// iterated) in field-name order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArgumentDraft {
    pub bindings: BTreeMap<String, Binding>,
}

impl ArgumentDraft {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, field: impl Into<String>, binding: Binding) -> Self {
        self.bindings.insert(field.into(), binding);
        self
    }

    /// Replaces every reference with the value it points to in `context`.
    /// Dangling references resolve to `null`.
    pub fn resolve(&self, context: &Context) -> BTreeMap<String, Value> {
        self.bindings
            .iter()
            .map(|(k, b)| {
                let v = match b {
                    Binding::Literal(v) => v.clone(),
                    Binding::Ref(r) => context.lookup(r).unwrap_or(Value::Null),
                };
                (k.clone(), v)
            })
            .collect()
    }

    /// Draft with all references replaced by literals.
    pub fn resolved(&self, context: &Context) -> ArgumentDraft {
        ArgumentDraft {
            bindings: self
                .resolve(context)
                .into_iter()
                .map(|(k, v)| (k, Binding::Literal(v)))
                .collect(),
        }
    }
}

/// Result of one tool invocation: either a payload or an error token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolOutput {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payload: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_token: Option<String>,
}

impl ToolOutput {
    /// A successful output. An empty payload is represented by a single
    /// `null`-valued `result` field so the payload/error exclusivity holds.
    pub fn ok(payload: BTreeMap<String, Value>) -> Self {
        let payload = if payload.is_empty() {
            [("result".to_string(), Value::Null)].into()
        } else {
            payload
        };
        Self {
            payload,
            error_token: None,
        }
    }

    pub fn error(token: impl Into<String>) -> Self {
        Self {
            payload: BTreeMap::new(),
            error_token: Some(token.into()),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error_token.is_some()
    }

    /// Exactly one of {non-empty payload, error token}.
    pub fn is_well_formed(&self) -> bool {
        self.payload.is_empty() == self.error_token.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub tool: String,
    pub draft: ArgumentDraft,
    pub output: ToolOutput,
    /// Output schema of the tool at call time, used to type the payload.
    pub output_types: Vec<(String, SchemaType)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Context {
    pub query: Query,
    pub history: Vec<HistoryEntry>,
}

impl Context {
    pub fn new(query: Query) -> Self {
        Self {
            query,
            history: Vec::new(),
        }
    }

    pub fn push(&mut self, card: &ToolCard, draft: ArgumentDraft, output: ToolOutput) {
        self.history.push(HistoryEntry {
            tool: card.name.clone(),
            draft,
            output,
            output_types: card
                .outputs
                .iter()
                .map(|f| (f.name.clone(), f.ty.clone()))
                .collect(),
        });
    }

    pub fn extended(&self, card: &ToolCard, draft: ArgumentDraft, output: ToolOutput) -> Self {
        let mut next = self.clone();
        next.push(card, draft, output);
        next
    }

    pub fn lookup(&self, r: &ValueRef) -> Option<Value> {
        match r {
            ValueRef::Query => Some(Value::String(self.query.text.clone())),
            ValueRef::Attachment(i) => self.query.attachments.get(*i).map(|a| a.value.clone()),
            ValueRef::Output { entry, field } => self
                .history
                .get(*entry)
                .and_then(|h| h.output.payload.get(field))
                .cloned(),
        }
    }

    /// Every value a tool could be bound to, grouped by type. Recomputed
    /// from the query and history on each call. Within a type, entries are
    /// ordered oldest first: query text, attachments, then history in
    /// call order (error outputs contribute nothing).
    pub fn available_values(&self) -> BTreeMap<SchemaType, Vec<ValueRef>> {
        let mut index: BTreeMap<SchemaType, Vec<ValueRef>> = BTreeMap::new();
        index
            .entry(SchemaType::Text)
            .or_default()
            .push(ValueRef::Query);
        for (i, a) in self.query.attachments.iter().enumerate() {
            index
                .entry(a.ty.clone())
                .or_default()
                .push(ValueRef::Attachment(i));
        }
        for (i, h) in self.history.iter().enumerate() {
            if h.output.is_error() {
                continue;
            }
            for (field, ty) in &h.output_types {
                if h.output.payload.contains_key(field) {
                    index.entry(ty.clone()).or_default().push(ValueRef::Output {
                        entry: i,
                        field: field.clone(),
                    });
                }
            }
        }
        index
    }

    /// Tool names on this context's path, in call order.
    pub fn tools_used(&self) -> impl Iterator<Item = &str> {
        self.history.iter().map(|h| h.tool.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ocr() -> ToolCard {
        ToolCard::new("ocr", "read text")
            .input("image", SchemaType::ImageRef)
            .output("text", SchemaType::Text)
    }

    #[test]
    fn available_values_tracks_history() {
        let mut ctx =
            Context::new(Query::text("q").with_attachment(SchemaType::ImageRef, "img://1"));
        ctx.push(
            &ocr(),
            ArgumentDraft::new().bind("image", Binding::Ref(ValueRef::Attachment(0))),
            ToolOutput::ok([("text".to_string(), json!("343 km"))].into()),
        );
        let idx = ctx.available_values();
        assert_eq!(
            idx[&SchemaType::Text],
            vec![
                ValueRef::Query,
                ValueRef::Output {
                    entry: 0,
                    field: "text".into()
                }
            ]
        );
        assert_eq!(idx[&SchemaType::ImageRef], vec![ValueRef::Attachment(0)]);
    }

    #[test]
    fn error_outputs_contribute_no_values() {
        let mut ctx = Context::new(Query::text("q"));
        ctx.push(&ocr(), ArgumentDraft::new(), ToolOutput::error("timeout"));
        assert_eq!(
            ctx.available_values()[&SchemaType::Text],
            vec![ValueRef::Query]
        );
    }

    #[test]
    fn output_exclusivity() {
        assert!(ToolOutput::ok(BTreeMap::new()).is_well_formed());
        assert!(ToolOutput::error("x").is_well_formed());
        let bad = ToolOutput {
            payload: [("a".to_string(), json!(1))].into(),
            error_token: Some("x".into()),
        };
        assert!(!bad.is_well_formed());
    }
}

use serde_json::Value;

use super::context::{ArgumentDraft, Binding, ValueRef};

/// Canonical key for a `(tool, arguments)` pair.
///
/// Bindings are emitted in field-name order; literal values are encoded as
/// JSON (object keys sorted) and references as history indices, so drafts
/// that bind the same values to the same fields always share a key. The
/// key is a JSON array, which keeps it injective.
pub fn canonical_cache_key(tool_name: &str, args: &ArgumentDraft) -> String {
    let bindings: Vec<Value> = args
        .bindings
        .iter()
        .map(|(field, b)| {
            let encoded = match b {
                Binding::Literal(v) => Value::Array(vec!["lit".into(), v.clone()]),
                Binding::Ref(ValueRef::Query) => Value::Array(vec!["query".into()]),
                Binding::Ref(ValueRef::Attachment(i)) => {
                    Value::Array(vec!["attachment".into(), (*i).into()])
                }
                Binding::Ref(ValueRef::Output { entry, field }) => {
                    Value::Array(vec!["h".into(), (*entry).into(), field.clone().into()])
                }
            };
            Value::Array(vec![field.clone().into(), encoded])
        })
        .collect();
    Value::Array(vec![tool_name.into(), Value::Array(bindings)]).to_string()
}

//! Judge prompt rendering from the versioned templates in `assets/prompts`.

use serde_json::{Map, Value};

use crate::tool_model::{Context, ToolCard, ToolOutput};

use super::evaluator::{PostRequest, PreRequest};

pub const TEMPLATE_VERSION: &str = "v1";

const PRE_SYSTEM: &str = include_str!("../../assets/prompts/v1/pre_system.txt");
const PRE_USER: &str = include_str!("../../assets/prompts/v1/pre_user.txt");
const POST_SYSTEM: &str = include_str!("../../assets/prompts/v1/post_system.txt");
const POST_USER: &str = include_str!("../../assets/prompts/v1/post_user.txt");

/// Marker rendered in place of an empty call history.
pub const EMPTY_CONTEXT_MARKER: &str = "(no prior tool calls)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}

pub fn render_context(context: &Context) -> String {
    if context.history.is_empty() {
        return EMPTY_CONTEXT_MARKER.to_string();
    }
    let mut lines = Vec::with_capacity(context.history.len());
    for (i, h) in context.history.iter().enumerate() {
        let args = Value::Object(
            h.draft
                .resolve(context)
                .into_iter()
                .collect::<Map<String, Value>>(),
        );
        lines.push(format!(
            "[{}] {}({}) -> {}",
            i + 1,
            h.tool,
            args,
            render_output(&h.output)
        ));
    }
    lines.join("\n")
}

pub fn render_output(output: &ToolOutput) -> String {
    serde_json::to_string(output).expect("output serializes")
}

fn card_slots(card: &ToolCard) -> Vec<(&'static str, String)> {
    let json = serde_json::to_value(card).expect("card serializes");
    let examples = json
        .get("example")
        .or_else(|| json.get("examples"))
        .map(Value::to_string)
        .unwrap_or_else(|| "(none)".into());
    vec![
        ("TOOL_NAME", card.name.clone()),
        ("TOOL_DESCRIPTION", card.description.clone()),
        ("TOOL_INPUT_SCHEMA", json["input"].to_string()),
        ("TOOL_OUTPUT_SCHEMA", json["output"].to_string()),
        ("TOOL_EXAMPLES", examples),
    ]
}

pub fn render_pre_prompt(request: &PreRequest<'_>) -> RenderedPrompt {
    let args = Value::Object(request.draft.resolve(request.context).into_iter().collect());
    let mut slots = vec![
        ("USER_QUERY", request.context.query.text.clone()),
        ("CURRENT_CONTEXT", render_context(request.context)),
    ];
    slots.extend(card_slots(request.card));
    slots.push(("ARGUMENT_DRAFT_JSON", args.to_string()));
    RenderedPrompt {
        system: PRE_SYSTEM.to_string(),
        user: fill(PRE_USER, &slots),
    }
}

pub fn render_post_prompt(request: &PostRequest<'_>) -> RenderedPrompt {
    let args = Value::Object(
        request
            .draft
            .resolve(request.context_before)
            .into_iter()
            .collect(),
    );
    let mut slots = vec![
        ("USER_QUERY", request.context_before.query.text.clone()),
        (
            "CONTEXT_BEFORE_CALL",
            render_context(request.context_before),
        ),
    ];
    slots.extend(card_slots(request.card));
    slots.push(("ARGUMENT_JSON", args.to_string()));
    slots.push(("TOOL_OUTPUT_RAW", render_output(request.output)));
    RenderedPrompt {
        system: POST_SYSTEM.to_string(),
        user: fill(POST_USER, &slots),
    }
}

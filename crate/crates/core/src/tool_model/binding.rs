use super::card::ToolCard;
use super::context::{ArgumentDraft, Binding, Context, ValueRef};
use super::ToolModelError;

/// True iff every required input of `card` can be bound from the context.
/// Optional inputs never block a tool, and there is no cross-type coercion.
pub fn is_admissible(context: &Context, card: &ToolCard) -> bool {
    let available = context.available_values();
    card.required_inputs()
        .all(|f| available.get(&f.ty).is_some_and(|v| !v.is_empty()))
}

/// Builds the minimal draft: one binding per required field, taken from
/// the most recent type-compatible history output, falling back to the
/// query's attachments (latest first) and finally the query text.
pub fn draft_arguments(
    context: &Context,
    card: &ToolCard,
) -> Result<ArgumentDraft, ToolModelError> {
    let available = context.available_values();
    let mut draft = ArgumentDraft::new();
    for field in card.required_inputs() {
        let candidates = available.get(&field.ty).map(Vec::as_slice).unwrap_or(&[]);
        // Candidates are oldest first, and history outranks the query.
        let chosen = candidates
            .iter()
            .rev()
            .find(|r| matches!(r, ValueRef::Output { .. }))
            .or_else(|| {
                candidates
                    .iter()
                    .rev()
                    .find(|r| matches!(r, ValueRef::Attachment(_)))
            })
            .or_else(|| candidates.iter().find(|r| matches!(r, ValueRef::Query)))
            .ok_or_else(|| ToolModelError::NotAdmissible {
                tool: card.name.clone(),
                field: field.name.clone(),
            })?;
        draft = draft.bind(field.name.clone(), Binding::Ref(chosen.clone()));
    }
    Ok(draft)
}

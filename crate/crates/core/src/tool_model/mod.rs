//! Tool cards, typed schemas, contexts, admissibility, argument drafting,
//! cache keys and the lexical shortlist.

mod binding;
mod cache_key;
mod card;
mod context;
mod registry;
mod retrieval;
mod schema;

pub use binding::{draft_arguments, is_admissible};
pub use cache_key::canonical_cache_key;
pub use card::{validate_card, CardExample, InputField, OutputField, ToolCard};
pub use context::{
    ArgumentDraft, Attachment, Binding, Context, HistoryEntry, Query, ToolOutput, ValueRef,
};
pub use registry::ToolRegistry;
pub use retrieval::{lexical_scores, retrieve_shortlist, tokenize};
pub use schema::{NamedField, SchemaType};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ToolModelError {
    #[error("tool `{0}` is already registered")]
    DuplicateName(String),
    #[error("invalid tool card `{tool}`: {}", violations.join("; "))]
    InvalidCard {
        tool: String,
        violations: Vec<String>,
    },
    #[error("tool `{tool}` is not admissible: no value for required field `{field}`")]
    NotAdmissible { tool: String, field: String },
    #[error("malformed tool card: {0}")]
    CardFormat(String),
}

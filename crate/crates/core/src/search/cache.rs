use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tool_model::{
    canonical_cache_key, ArgumentDraft, Context, Query, SchemaType, ToolCard, ToolOutput,
};

/// A failure raised by a tool. The engine turns it into an error token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecFault {
    pub class: String,
}

impl ExecFault {
    pub fn new(class: impl Into<String>) -> Self {
        Self {
            class: class.into(),
        }
    }
}

/// Runs tools. Implementations must be deterministic for caching to be sound.
pub trait Executor: Send + Sync {
    fn execute(
        &self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> Result<ToolOutput, ExecFault>;
}

impl<X: Executor + ?Sized> Executor for &X {
    fn execute(
        &self,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> Result<ToolOutput, ExecFault> {
        (**self).execute(card, draft, context)
    }
}

/// What a planner needs to know about the problem it is solving.
pub trait PlanningTask: Send + Sync {
    fn query(&self) -> &Query;
    fn is_goal(&self, context: &Context) -> bool;
    /// Type of the final answer, if known. Used by planners that reason
    /// over unexecuted paths.
    fn answer_type(&self) -> Option<SchemaType> {
        None
    }
}

/// The draft with every reference replaced by the value it points to.
pub fn literal_draft(draft: &ArgumentDraft, context: &Context) -> ArgumentDraft {
    draft.resolved(context)
}

/// Key under which a call is cached. References are resolved first so
/// equal calls made from different branches share an entry.
pub fn execution_key(tool: &str, draft: &ArgumentDraft, context: &Context) -> String {
    canonical_cache_key(tool, &literal_draft(draft, context))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ExecutionCache {
    entries: BTreeMap<String, ToolOutput>,
    pub hits: u64,
    pub misses: u64,
}

impl ExecutionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&ToolOutput> {
        self.entries.get(key)
    }

    /// Returns the cached output for this call, running the executor only
    /// on a miss. Faults are stored as error-token outputs. The flag is
    /// true on a hit.
    pub fn execute_action<X: Executor + ?Sized>(
        &mut self,
        executor: &X,
        card: &ToolCard,
        draft: &ArgumentDraft,
        context: &Context,
    ) -> (ToolOutput, bool) {
        let key = execution_key(&card.name, draft, context);
        if let Some(out) = self.entries.get(&key) {
            self.hits += 1;
            return (out.clone(), true);
        }
        self.misses += 1;
        let out = match executor.execute(card, draft, context) {
            Ok(o) => o,
            Err(f) => ToolOutput::error(f.class),
        };
        self.entries.insert(key, out.clone());
        (out, false)
    }
}

use std::collections::BTreeMap;

use super::card::{validate_card, ToolCard};
use super::ToolModelError;

/// Name-indexed tool library. Iteration is in name order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    cards: BTreeMap<String, ToolCard>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_tool(mut self, card: ToolCard) -> Result<Self, ToolModelError> {
        self.insert(card)?;
        Ok(self)
    }

    pub fn insert(&mut self, card: ToolCard) -> Result<(), ToolModelError> {
        let violations = validate_card(&card);
        if !violations.is_empty() {
            return Err(ToolModelError::InvalidCard {
                tool: card.name,
                violations,
            });
        }
        if self.cards.contains_key(&card.name) {
            return Err(ToolModelError::DuplicateName(card.name));
        }
        self.cards.insert(card.name.clone(), card);
        Ok(())
    }

    pub fn from_cards<I: IntoIterator<Item = ToolCard>>(cards: I) -> Result<Self, ToolModelError> {
        let mut reg = Self::new();
        for c in cards {
            reg.insert(c)?;
        }
        Ok(reg)
    }

    pub fn get(&self, name: &str) -> Option<&ToolCard> {
        self.cards.get(name)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn cards(&self) -> impl Iterator<Item = &ToolCard> {
        self.cards.values()
    }

    /// Registry restricted to `names`; unknown names are skipped.
    pub fn subset<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Self {
        let cards = names
            .into_iter()
            .filter_map(|n| self.cards.get(n).map(|c| (n.to_string(), c.clone())))
            .collect();
        Self { cards }
    }
}

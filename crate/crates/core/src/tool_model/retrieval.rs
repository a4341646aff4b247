//! Lexical shortlist over a tool registry (Okapi BM25).

use std::collections::{BTreeMap, BTreeSet};

use super::card::ToolCard;
use super::registry::ToolRegistry;

const K1: f64 = 1.2;
const B: f64 = 0.75;

/// Lowercased alphanumeric terms. Underscores and hyphens split words, so
/// `unit_converter` contributes `unit` and `converter`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn card_terms(card: &ToolCard) -> Vec<String> {
    let mut terms = tokenize(&card.name);
    terms.extend(tokenize(&card.description));
    for tag in &card.domain_tags {
        terms.extend(tokenize(tag));
    }
    terms
}

/// BM25 score of `query` against every card, keyed by card name.
pub fn lexical_scores(query: &str, registry: &ToolRegistry) -> BTreeMap<String, f64> {
    let docs: Vec<(&str, Vec<String>)> = registry
        .cards()
        .map(|c| (c.name.as_str(), card_terms(c)))
        .collect();
    let n = docs.len() as f64;
    if docs.is_empty() {
        return BTreeMap::new();
    }
    let avg_len = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, terms) in &docs {
        for t in terms.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    let query_terms = tokenize(query);
    docs.iter()
        .map(|(name, terms)| {
            let len = terms.len() as f64;
            let score = query_terms
                .iter()
                .map(|q| {
                    let tf = terms.iter().filter(|t| *t == q).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let d = df[q.as_str()] as f64;
                    let idf = (1.0 + (n - d + 0.5) / (d + 0.5)).ln();
                    let norm = if avg_len > 0.0 { len / avg_len } else { 1.0 };
                    idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * norm))
                })
                .sum::<f64>();
            (name.to_string(), score)
        })
        .collect()
}

/// Top `k` cards by lexical relevance; ties are broken by name.
pub fn retrieve_shortlist<'a>(
    query: &str,
    registry: &'a ToolRegistry,
    k: usize,
) -> Vec<&'a ToolCard> {
    let scores = lexical_scores(query, registry);
    let mut ranked: Vec<&ToolCard> = registry.cards().collect();
    ranked.sort_by(|a, b| {
        scores[&b.name]
            .total_cmp(&scores[&a.name])
            .then_with(|| a.name.cmp(&b.name))
    });
    ranked.truncate(k.max(1));
    ranked
}

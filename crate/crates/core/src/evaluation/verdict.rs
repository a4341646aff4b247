use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;

/// A judge's score in `[0, 1]` with its justification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub score: f64,
    pub explanation: String,
}

impl JudgeVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedVerdict {
    pub verdict: JudgeVerdict,
    /// The raw score was outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// Extracts the first JSON object carrying a numeric `score` from a judge
/// reply. Surrounding prose and code fences are ignored.
pub fn parse_verdict(raw: &str) -> Result<ParsedVerdict, EvalError> {
    for (start, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else {
            continue;
        };
        let Some(score) = obj.get("score").and_then(Value::as_f64) else {
            continue;
        };
        if !score.is_finite() {
            continue;
        }
        let explanation = obj
            .get("explanation")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let clamped_score = score.clamp(0.0, 1.0);
        return Ok(ParsedVerdict {
            verdict: JudgeVerdict {
                score: clamped_score,
                explanation,
            },
            clamped: clamped_score != score,
        });
    }
    Err(EvalError::MalformedVerdict(truncate(raw, 120)))
}

fn truncate(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SearchError;

/// Engine parameters. Loadable from a flat `key = value` file; omitted keys
/// take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub lambda: f64,
    pub r_max: usize,
    pub tau_pre: f64,
    pub tau_post: f64,
    /// Children kept per expansion; `None` keeps all that pass `tau_pre`.
    /// Written as an integer or `"inf"`.
    #[serde(serialize_with = "ser_top_k", deserialize_with = "de_top_k")]
    pub top_k: Option<usize>,
    pub early_stop_epsilon: f64,
    pub early_stop_window: usize,
    pub jitter_magnitude: f64,
    /// Per-depth multiplicative factor applied to `lambda`.
    pub anneal_lambda: Option<f64>,
    pub max_depth: usize,
    pub seed: u64,
    /// When false every prior is 1 and no pre-execution judgment is made.
    pub pre_eval: bool,
    /// When false the reward is the goal indicator of the executed node
    /// and post-pruning is off.
    pub post_eval: bool,
    /// Report real elapsed time instead of the modelled cost clock.
    pub wall_clock: bool,
    pub exec_cost_s: f64,
    pub judge_cost_s: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            lambda: 1.4,
            r_max: 60,
            tau_pre: 0.3,
            tau_post: 0.4,
            top_k: Some(3),
            early_stop_epsilon: 1e-3,
            early_stop_window: 10,
            jitter_magnitude: 1e-6,
            anneal_lambda: None,
            max_depth: 8,
            seed: 0,
            pre_eval: true,
            post_eval: true,
            wall_clock: false,
            exec_cost_s: 1.0,
            judge_cost_s: 0.5,
        }
    }
}

fn ser_top_k<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(k) => s.serialize_u64(*k as u64),
        None => s.serialize_str("inf"),
    }
}

fn de_top_k<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Word(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(k) => Ok(Some(k as usize)),
        Raw::Word(w) if matches!(w.as_str(), "inf" | "unbounded" | "none") => Ok(None),
        Raw::Word(w) => Err(serde::de::Error::custom(format!("bad top_k `{w}`"))),
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let mut bad = Vec::new();
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            bad.push("lambda must be >= 0");
        }
        if self.r_max == 0 {
            bad.push("r_max must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau_pre) {
            bad.push("tau_pre outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau_post) {
            bad.push("tau_post outside [0, 1]");
        }
        if self.top_k == Some(0) {
            bad.push("top_k must be positive");
        }
        if !(self.early_stop_epsilon > 0.0) {
            bad.push("early_stop_epsilon must be > 0");
        }
        if self.early_stop_window == 0 {
            bad.push("early_stop_window must be positive");
        }
        if !(self.jitter_magnitude >= 0.0) {
            bad.push("jitter_magnitude must be >= 0");
        }
        if let Some(f) = self.anneal_lambda {
            if !(f > 0.0 && f <= 1.0) {
                bad.push("anneal_lambda outside (0, 1]");
            }
        }
        if self.max_depth == 0 {
            bad.push("max_depth must be positive");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(SearchError::InvalidConfig(bad.join("; ")))
        }
    }

    pub fn from_kv_str(text: &str) -> Result<Self, SearchError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| SearchError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SearchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    pub fn to_kv_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Plain UCT: uniform priors, no pruning on either side.
    pub fn vanilla(&self) -> Self {
        Self {
            pre_eval: false,
            tau_pre: 0.0,
            top_k: None,
            tau_post: 0.0,
            ..self.clone()
        }
    }
}

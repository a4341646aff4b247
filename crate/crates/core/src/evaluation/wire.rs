//! HTTP client for an external LLM judge.
//!
//! Each judgment is a `POST` of `{"system", "user", "temperature": 0}`; the
//! response body must contain a verdict object somewhere in its text.

use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluator::{Evaluator, PostRequest, PreRequest};
use super::prompts::{render_post_prompt, render_pre_prompt, RenderedPrompt};
use super::verdict::parse_verdict;
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireConfig {
    pub endpoint: String,
    /// Header carrying the credential, e.g. `Authorization`.
    #[serde(default)]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub auth_value: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    250
}

impl WireConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            auth_header: None,
            auth_value: None,
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct WireBody<'a> {
    system: &'a str,
    user: &'a str,
    temperature: u8,
}

pub struct WireJudge {
    config: WireConfig,
    client: reqwest::blocking::Client,
    rng: Mutex<ChaCha8Rng>,
}

impl WireJudge {
    pub fn new(config: WireConfig) -> Result<Self, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| EvalError::EvaluatorUnavailable(e.to_string()))?;
        let rng = Mutex::new(ChaCha8Rng::seed_from_u64(config.seed));
        Ok(Self {
            config,
            client,
            rng,
        })
    }

    fn attempt(&self, body: &str) -> Result<String, String> {
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .header("content-type", "application/json")
            .body(body.to_string());
        if let (Some(name), Some(value)) = (&self.config.auth_header, &self.config.auth_value) {
            req = req.header(name.as_str(), value.as_str());
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.text().map_err(|e| e.to_string())
    }

    /// Sends one prompt and parses the reply, retrying transport failures.
    pub fn judge(&self, prompt: &RenderedPrompt) -> Result<f64, EvalError> {
        let body = serde_json::to_string(&WireBody {
            system: &prompt.system,
            user: &prompt.user,
            temperature: 0,
        })
        .expect("wire body serializes");
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                let jitter: f64 = self.rng.lock().expect("rng poisoned").gen_range(0.5..1.5);
                let base = self.config.backoff_ms as f64 * f64::from(1u32 << (attempt - 1));
                thread::sleep(Duration::from_millis((base * jitter) as u64));
            }
            match self.attempt(&body) {
                Ok(text) => return parse_verdict(&text).map(|p| p.verdict.score),
                Err(e) => last = e,
            }
        }
        Err(EvalError::EvaluatorUnavailable(format!(
            "{} after {} attempts: {last}",
            self.config.endpoint,
            self.config.retries + 1
        )))
    }
}

impl Evaluator for WireJudge {
    fn score_pre(&self, request: &PreRequest<'_>) -> Result<f64, EvalError> {
        self.judge(&render_pre_prompt(request))
    }

    fn score_post(&self, request: &PostRequest<'_>) -> Result<f64, EvalError> {
        self.judge(&render_post_prompt(request))
    }
}

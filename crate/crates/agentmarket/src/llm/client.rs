//! Chat-completion clients: a scripted replay client and an HTTP client.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::orderbook::AgentId;

use super::parse::decision_schema;
use super::prompt::PromptBundle;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub text: String,
    pub model_id: String,
    pub latency_ms: u64,
    /// Transport attempts this completion took, 1 when the first succeeded.
    pub attempts: u32,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("no scripted response left for agent {agent} in round {round}")]
    ScriptExhausted { agent: AgentId, round: u32 },
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("client configuration: {0}")]
    Config(String),
}

pub trait ChatClient {
    fn complete(&mut self, agent: AgentId, round: u32, bundle: &PromptBundle) -> Result<RawCompletion, ClientError>;

    fn model_id(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    Scripted,
    Http,
}

impl LlmMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LlmMode::Scripted => "scripted",
            LlmMode::Http => "http",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmClientConfig {
    pub mode: LlmMode,
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: f64,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    /// First retry delay; doubles on every further retry.
    pub backoff_ms: u64,
    /// How many of an agent's own earlier decisions its prompt lists; 0
    /// shows market history only.
    pub recall_decisions: usize,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        LlmClientConfig {
            mode: LlmMode::Scripted,
            endpoint: None,
            model: "gpt-4o".into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 60.0,
            api_key_env: "OPENAI_API_KEY".into(),
            backoff_ms: 500,
            recall_decisions: 0,
        }
    }
}

/// One line of a script file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub agent: u32,
    /// Omitted: used for any round once the round-specific entries run out.
    #[serde(default)]
    pub round: Option<u32>,
    /// A decision object, or a string returned verbatim.
    pub response: Value,
    /// Keep serving this entry instead of consuming it.
    #[serde(default)]
    pub repeat: bool,
}

/// Replays queued responses keyed by agent and round.
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    by_round: HashMap<(AgentId, u32), VecDeque<ScriptEntry>>,
    any_round: HashMap<AgentId, VecDeque<ScriptEntry>>,
}

impl ScriptedClient {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut client = ScriptedClient::default();
        for e in entries {
            client.push(e);
        }
        client
    }

    /// Reads JSON lines; blank lines and lines starting with `#` are skipped.
    pub fn from_jsonl(text: &str) -> Result<Self, ClientError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line)
                .map_err(|e| ClientError::Config(format!("script line {}: {e}", i + 1)))?;
            entries.push(entry);
        }
        Ok(ScriptedClient::new(entries))
    }

    pub fn push(&mut self, entry: ScriptEntry) {
        let agent = AgentId(entry.agent);
        match entry.round {
            Some(r) => self.by_round.entry((agent, r)).or_default().push_back(entry),
            None => self.any_round.entry(agent).or_default().push_back(entry),
        }
    }

    fn next(&mut self, agent: AgentId, round: u32) -> Option<Value> {
        let queue = match self.by_round.get_mut(&(agent, round)) {
            Some(q) if !q.is_empty() => q,
            _ => self.any_round.get_mut(&agent)?,
        };
        let front = queue.front()?;
        if front.repeat {
            Some(front.response.clone())
        } else {
            queue.pop_front().map(|e| e.response)
        }
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&mut self, agent: AgentId, round: u32, _bundle: &PromptBundle) -> Result<RawCompletion, ClientError> {
        let response = self.next(agent, round).ok_or(ClientError::ScriptExhausted { agent, round })?;
        let text = match response {
            Value::String(s) => s,
            other => other.to_string(),
        };
        Ok(RawCompletion {
            text,
            model_id: "scripted".into(),
            latency_ms: 0,
            attempts: 1,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }

    fn model_id(&self) -> &str {
        "scripted"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportFailure {
    #[error("timed out")]
    Timeout,
    #[error("{0}")]
    Other(String),
}

/// Sends one JSON POST. Split out so retries can be tested without a network.
pub trait Transport {
    fn post(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<HttpReply, TransportFailure>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post(&self, url: &str, api_key: &str, body: &Value, timeout: Duration) -> Result<HttpReply, TransportFailure> {
        let response = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .timeout(timeout)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    TransportFailure::Timeout
                } else {
                    TransportFailure::Other(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| TransportFailure::Other(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

pub struct HttpChatClient {
    config: LlmClientConfig,
    endpoint: String,
    api_key: String,
    transport: Box<dyn Transport>,
}

impl HttpChatClient {
    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: LlmClientConfig, transport: Box<dyn Transport>) -> Result<Self, ClientError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ClientError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        Self::new(config, key, transport)
    }

    pub fn new(config: LlmClientConfig, api_key: String, transport: Box<dyn Transport>) -> Result<Self, ClientError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| ClientError::Config("http mode needs an endpoint".into()))?;
        if !(config.timeout_secs > 0.0 && config.timeout_secs.is_finite()) {
            return Err(ClientError::Config("timeout_secs must be positive".into()));
        }
        Ok(HttpChatClient { config, endpoint, api_key, transport })
    }

    fn request_body(&self, bundle: &PromptBundle) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_prompt},
                {"role": "user", "content": bundle.user_prompt},
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": "trade_decision", "strict": true, "schema": decision_schema()},
            },
        })
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Reply text, prompt tokens, completion tokens and finish reason.
type Completion = (String, Option<u64>, Option<u64>, Option<String>);

fn completion_from(body: &str) -> Result<Completion, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::BadResponse(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ClientError::BadResponse("missing choices[0].message.content".into()))?;
    let tokens = |p: &str| v.pointer(p).and_then(Value::as_u64);
    let model = v.get("model").and_then(Value::as_str).map(str::to_string);
    Ok((
        text.to_string(),
        tokens("/usage/prompt_tokens"),
        tokens("/usage/completion_tokens"),
        model,
    ))
}

impl ChatClient for HttpChatClient {
    fn complete(&mut self, _agent: AgentId, _round: u32, bundle: &PromptBundle) -> Result<RawCompletion, ClientError> {
        let body = self.request_body(bundle);
        let timeout = Duration::from_secs_f64(self.config.timeout_secs);
        let started = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let failure = match self.transport.post(&self.endpoint, &self.api_key, &body, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let (text, prompt_tokens, completion_tokens, model) = completion_from(&reply.body)?;
                    return Ok(RawCompletion {
                        text,
                        model_id: model.unwrap_or_else(|| self.config.model.clone()),
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts,
                        prompt_tokens,
                        completion_tokens,
                    });
                }
                Ok(reply) if retryable(reply.status) => format!("HTTP {}", reply.status),
                Ok(reply) => {
                    return Err(ClientError::Transport {
                        attempts,
                        message: format!("HTTP {}: {}", reply.status, reply.body),
                    })
                }
                Err(e) => e.to_string(),
            };
            if attempts > self.config.max_retries {
                return Err(ClientError::Transport { attempts, message: failure });
            }
            let delay = self.config.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
            std::thread::sleep(Duration::from_millis(delay));
        }
    }

    fn model_id(&self) -> &str {
        &self.config.model
    }
}

//! Blocking chat-completion client.
//!
//! Wire format is the common `POST {base}/chat/completions` shape with
//! `model`, `messages[{role, content}]` and `temperature`. Each call gets a
//! per-request timeout and one retry.

use std::net::{TcpStream, ToSocketAddrs};
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::Url;
use serde::{Deserialize, Serialize};

use super::{ReachabilityProbe, SpeakerError, SpeakerModel, SpeakerRequest};
use crate::types::Speaker;

pub const ENV_LLM_URL: &str = "TT_LLM_URL";
pub const ENV_LLM_KEY: &str = "TT_LLM_KEY";
pub const ENV_LLM_MODEL: &str = "TT_LLM_MODEL";

const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
const RETRY_BACKOFF: Duration = Duration::from_millis(250);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_s: f64,
    pub retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            url: None,
            api_key: None,
            model: DEFAULT_MODEL.to_owned(),
            temperature: 0.7,
            timeout_s: 10.0,
            retries: 1,
        }
    }
}

impl LlmConfig {
    /// Fills `url`, `api_key` and `model` from the environment where unset.
    pub fn with_env(mut self) -> Self {
        if self.url.is_none() {
            self.url = std::env::var(ENV_LLM_URL).ok().filter(|s| !s.is_empty());
        }
        if self.api_key.is_none() {
            self.api_key = std::env::var(ENV_LLM_KEY).ok().filter(|s| !s.is_empty());
        }
        if let Ok(m) = std::env::var(ENV_LLM_MODEL) {
            if !m.is_empty() {
                self.model = m;
            }
        }
        self
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s.max(0.001))
    }

    pub fn endpoint(&self) -> Result<Url, SpeakerError> {
        let base = self
            .url
            .as_deref()
            .ok_or_else(|| SpeakerError::Unavailable(format!("{ENV_LLM_URL} is not set")))?;
        let base = base.trim_end_matches('/');
        let full = if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        };
        Url::parse(&full).map_err(|e| SpeakerError::Unavailable(format!("bad url {full}: {e}")))
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Debug, Deserialize)]
struct ChatReply {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Debug, Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Chat-completion speaker.
#[derive(Debug)]
pub struct ChatClient {
    config: LlmConfig,
    endpoint: Url,
    http: Client,
}

impl ChatClient {
    pub fn new(config: LlmConfig) -> Result<Self, SpeakerError> {
        let endpoint = config.endpoint()?;
        let http = Client::builder()
            .timeout(config.timeout())
            .connect_timeout(config.timeout())
            .build()
            .map_err(|e| SpeakerError::Unavailable(e.to_string()))?;
        Ok(Self { config, endpoint, http })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn attempt(&self, body: &ChatBody<'_>) -> Result<String, Attempt> {
        let mut req = self.http.post(self.endpoint.clone()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        let reply: ChatReply =
            resp.json().map_err(|e| Attempt::Fatal(SpeakerError::MalformedReply(e.to_string())))?;
        let content = reply
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(|c| c.trim().to_owned())
            .unwrap_or_default();
        if content.is_empty() {
            return Err(Attempt::Fatal(SpeakerError::MalformedReply("empty completion".into())));
        }
        Ok(content)
    }
}

enum Attempt {
    Retryable(String),
    Fatal(SpeakerError),
}

impl SpeakerModel for ChatClient {
    fn respond(&mut self, request: &SpeakerRequest) -> Result<String, SpeakerError> {
        let mut messages = vec![ChatMessage { role: "system", content: &request.system_directive }];
        messages.extend(request.context.turns.iter().map(|t| ChatMessage {
            role: match t.speaker {
                Speaker::Robot => "assistant",
                Speaker::User => "user",
            },
            content: &t.text,
        }));
        let body = ChatBody { model: &self.config.model, messages, temperature: self.config.temperature };
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                thread::sleep(RETRY_BACKOFF);
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(reason)) => {
                    log::warn!("chat completion attempt {} failed: {reason}", attempt + 1);
                    last = reason;
                }
            }
        }
        Err(SpeakerError::Unavailable(last))
    }
}

/// TCP-level reachability of the configured endpoint, bounded by `timeout`.
#[derive(Debug, Clone)]
pub struct EndpointProbe {
    url: Option<Url>,
    timeout: Duration,
}

impl EndpointProbe {
    pub fn new(config: &LlmConfig, timeout: Duration) -> Self {
        Self { url: config.endpoint().ok(), timeout }
    }
}

impl ReachabilityProbe for EndpointProbe {
    fn is_reachable(&self) -> bool {
        let Some(url) = &self.url else {
            return false;
        };
        let (Some(host), Some(port)) = (url.host_str(), url.port_or_known_default()) else {
            return false;
        };
        let Ok(addrs) = (host, port).to_socket_addrs() else {
            return false;
        };
        addrs.into_iter().any(|a| TcpStream::connect_timeout(&a, self.timeout).is_ok())
    }
}

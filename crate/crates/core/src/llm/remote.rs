//! Remote chat-completion backend for live runs. Speaks the common
//! chat-completion HTTP shape; the API key comes from an environment
//! variable so it never lands in configs or logs.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{DecisionBackend, DecisionRequest, LlmError};

pub const DEFAULT_API_KEY_ENV: &str = "LGX_API_KEY";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemoteBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for RemoteBackendConfig {
    fn default() -> Self {
        RemoteBackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            // Greedy decoding for reproducibility unless overridden.
            temperature: 0.0,
            timeout_secs: 30.0,
            max_retries: 2,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

impl RemoteBackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout_secs > 0.0) {
            return Err(LlmError::Api(format!("timeout {} must be > 0", self.timeout_secs)));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: String,
}

pub struct RemoteBackend {
    cfg: RemoteBackendConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(cfg: RemoteBackendConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(RemoteBackend { cfg, client })
    }

    fn api_key(&self) -> Option<String> {
        std::env::var(&self.cfg.api_key_env).ok().filter(|k| !k.is_empty())
    }

    fn post_once(&self, prompt: &str) -> Result<String, LlmError> {
        let body = ChatRequest {
            model: &self.cfg.model,
            temperature: self.cfg.temperature,
            messages: [ChatMessage { role: "user", content: prompt }],
        };
        let mut request = self.client.post(&self.cfg.endpoint).json(&body);
        if let Some(key) = self.api_key() {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout(self.cfg.timeout_secs)
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Err(LlmError::Api(format!("{status}: {text}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| LlmError::Api(format!("malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::Api("response carried no choices".into()))
    }
}

impl DecisionBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}:t{}", self.cfg.model, self.cfg.temperature)
    }

    fn decide(&self, req: &DecisionRequest<'_>) -> Result<String, LlmError> {
        let mut last = None;
        for _ in 0..=self.cfg.max_retries {
            match self.post_once(req.prompt) {
                Ok(reply) => return Ok(reply),
                // API-level rejections will not improve on retry.
                Err(e @ LlmError::Api(_)) => return Err(e),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| LlmError::Transport("no attempts made".into())))
    }
}

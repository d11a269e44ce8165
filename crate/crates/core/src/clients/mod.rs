//! Contracts for the four external model services, with offline stubs and HTTP backends.

#[cfg(feature = "http")]
pub mod http;
pub mod prompts;
mod retry;
pub mod stub;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use retry::RetryPolicy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("service returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("cannot read audio {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("embedding has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("client not configured: {0}")]
    NotConfigured(String),
}

impl ClientError {
    /// Transient failures worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) | ClientError::Timeout => true,
            ClientError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    pub(crate) fn unreadable(path: &Path, reason: impl ToString) -> Self {
        ClientError::Unreadable {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        }
    }
}

pub type ClientResult<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub temperature: f32,
    /// Name of the environment variable holding a bearer token.
    pub api_key_env: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            endpoint: String::new(),
            model: String::new(),
            timeout_s: 60.0,
            max_retries: 3,
            temperature: 0.0,
            api_key_env: None,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            ..RetryPolicy::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: ChatRole,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: ChatRole::System,
            content: content.into(),
        }
    }
}

/// Which prompt family a chat request belongs to; stubs dispatch on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    BargeInJudge,
    BargeInGenerate,
    SelfCorrection,
    Restart,
    Emotion,
    GoalAlignment,
    FreeForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub kind: PromptKind,
    pub messages: Vec<Message>,
    /// Template variables the messages were rendered from.
    pub vars: BTreeMap<String, String>,
    pub temperature: Option<f32>,
}

impl ChatRequest {
    pub fn free_form(messages: Vec<Message>) -> Self {
        ChatRequest {
            kind: PromptKind::FreeForm,
            messages,
            vars: BTreeMap::new(),
            temperature: None,
        }
    }

    /// Renders `template` with `vars` into a single user message.
    pub fn from_template(kind: PromptKind, template: &str, vars: BTreeMap<String, String>) -> Self {
        ChatRequest {
            kind,
            messages: vec![Message::user(prompts::render(template, &vars))],
            vars,
            temperature: None,
        }
    }

    pub fn with_temperature(mut self, t: f32) -> Self {
        self.temperature = Some(t);
        self
    }

    pub fn var(&self, key: &str) -> &str {
        self.vars.get(key).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    /// Complete WAV file bytes.
    pub wav: Vec<u8>,
    pub duration_s: f64,
}

pub trait ChatClient: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> ClientResult<String>;
}

pub trait TtsClient: Send + Sync {
    fn tts(&self, text: &str, style_instruction: &str, ref_audio: &str) -> ClientResult<AudioClip>;
}

pub trait AsrClient: Send + Sync {
    fn transcribe(&self, audio: &Path) -> ClientResult<String>;
}

pub trait EmbedClient: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, audio: &Path) -> ClientResult<Vec<f64>>;

    /// `embed` with the returned length checked against `dim()`.
    fn embed_checked(&self, audio: &Path) -> ClientResult<Vec<f64>> {
        let v = self.embed(audio)?;
        if v.len() != self.dim() {
            return Err(ClientError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v)
    }
}

/// Shareable handles to every service a pipeline run needs.
#[derive(Clone)]
pub struct Clients {
    pub chat: Arc<dyn ChatClient>,
    pub tts: Arc<dyn TtsClient>,
    pub asr: Arc<dyn AsrClient>,
    pub embed: Arc<dyn EmbedClient>,
}

impl Clients {
    pub fn stub() -> Self {
        Clients {
            chat: Arc::new(stub::StubChat::default()),
            tts: Arc::new(stub::StubTts::default()),
            asr: Arc::new(stub::StubAsr::default()),
            embed: Arc::new(stub::StubEmbed::default()),
        }
    }
}

/// Length in seconds of an in-memory WAV file.
pub fn wav_duration(wav: &[u8]) -> Result<f64, hound::Error> {
    let r = hound::WavReader::new(std::io::Cursor::new(wav))?;
    let spec = r.spec();
    Ok(r.duration() as f64 / spec.sample_rate as f64)
}

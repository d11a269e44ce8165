//! Blocking HTTP backends.
//!
//! Chat uses the common chat-completions JSON shape. TTS posts JSON and
//! expects WAV bytes back; ASR and embedding post raw WAV bytes and expect
//! `{"text": ...}` and `{"embedding": [...]}` respectively.

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use ureq::Agent;

use super::{
    AsrClient, AudioClip, ChatClient, ChatRequest, ClientConfig, ClientError, ClientResult, EmbedClient,
    RetryPolicy, TtsClient,
};
use super::wav_duration;

struct Endpoint {
    agent: Agent,
    cfg: ClientConfig,
    retry: RetryPolicy,
}

impl Endpoint {
    fn new(cfg: ClientConfig) -> ClientResult<Self> {
        if cfg.endpoint.is_empty() {
            return Err(ClientError::NotConfigured("empty endpoint URL".into()));
        }
        cfg.validate().map_err(ClientError::NotConfigured)?;
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Endpoint {
            retry: cfg.retry_policy(),
            agent,
            cfg,
        })
    }

    fn token(&self) -> Option<String> {
        self.cfg
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty())
    }

    fn post(&self, body: Body<'_>) -> ClientResult<Vec<u8>> {
        self.retry.run(|_| {
            let mut req = self.agent.post(&self.cfg.endpoint);
            if let Some(t) = self.token() {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            let resp = match body {
                Body::Json(v) => req.send_json(v),
                Body::Wav(bytes) => req.header("Content-Type", "audio/wav").send(bytes),
            };
            let mut resp = resp.map_err(transport)?;
            let status = resp.status().as_u16();
            let bytes = resp.body_mut().read_to_vec().map_err(transport)?;
            if !(200..300).contains(&status) {
                return Err(ClientError::Status {
                    status,
                    body: String::from_utf8_lossy(&bytes).chars().take(500).collect(),
                });
            }
            Ok(bytes)
        })
    }
}

#[derive(Clone, Copy)]
enum Body<'a> {
    Json(&'a serde_json::Value),
    Wav(&'a [u8]),
}

fn transport(e: ureq::Error) -> ClientError {
    match e {
        ureq::Error::Timeout(_) => ClientError::Timeout,
        other => ClientError::Transport(other.to_string()),
    }
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> ClientResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ClientError::BadResponse(e.to_string()))
}

fn read_audio(path: &Path) -> ClientResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| ClientError::unreadable(path, e))
}

pub struct HttpChat(Endpoint);

impl HttpChat {
    pub fn new(cfg: ClientConfig) -> ClientResult<Self> {
        Endpoint::new(cfg).map(HttpChat)
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl ChatClient for HttpChat {
    fn chat(&self, req: &ChatRequest) -> ClientResult<String> {
        let body = json!({
            "model": self.0.cfg.model,
            "messages": req.messages,
            "temperature": req.temperature.unwrap_or(self.0.cfg.temperature),
        });
        let c: Completion = parse(&self.0.post(Body::Json(&body))?)?;
        c.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ClientError::BadResponse("no choices in completion".into()))
    }
}

pub struct HttpTts(Endpoint);

impl HttpTts {
    pub fn new(cfg: ClientConfig) -> ClientResult<Self> {
        Endpoint::new(cfg).map(HttpTts)
    }
}

impl TtsClient for HttpTts {
    fn tts(&self, text: &str, style_instruction: &str, ref_audio: &str) -> ClientResult<AudioClip> {
        let body = json!({
            "model": self.0.cfg.model,
            "text": text,
            "instruction": style_instruction,
            "ref_audio": ref_audio,
            "response_format": "wav",
        });
        let wav = self.0.post(Body::Json(&body))?;
        let duration_s = wav_duration(&wav)
            .map_err(|e| ClientError::BadResponse(format!("not a WAV response: {e}")))?;
        Ok(AudioClip { wav, duration_s })
    }
}

pub struct HttpAsr(Endpoint);

impl HttpAsr {
    pub fn new(cfg: ClientConfig) -> ClientResult<Self> {
        Endpoint::new(cfg).map(HttpAsr)
    }
}

#[derive(Deserialize)]
struct Transcript {
    text: String,
}

impl AsrClient for HttpAsr {
    fn transcribe(&self, audio: &Path) -> ClientResult<String> {
        let bytes = read_audio(audio)?;
        let t: Transcript = parse(&self.0.post(Body::Wav(&bytes))?)?;
        Ok(t.text)
    }
}

pub struct HttpEmbed {
    endpoint: Endpoint,
    dim: usize,
}

impl HttpEmbed {
    pub fn new(cfg: ClientConfig, dim: usize) -> ClientResult<Self> {
        Ok(HttpEmbed {
            endpoint: Endpoint::new(cfg)?,
            dim,
        })
    }
}

#[derive(Deserialize)]
struct Embedding {
    embedding: Vec<f64>,
}

impl EmbedClient for HttpEmbed {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, audio: &Path) -> ClientResult<Vec<f64>> {
        let bytes = read_audio(audio)?;
        let e: Embedding = parse(&self.endpoint.post(Body::Wav(&bytes))?)?;
        Ok(e.embedding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::Message;

    #[test]
    fn empty_endpoint_is_not_configured() {
        assert!(matches!(HttpChat::new(ClientConfig::default()), Err(ClientError::NotConfigured(_))));
    }

    #[test]
    fn unreachable_endpoint_surfaces_transport_error() {
        let cfg = ClientConfig {
            endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
            timeout_s: 2.0,
            max_retries: 0,
            ..ClientConfig::default()
        };
        let c = HttpChat::new(cfg).unwrap();
        let err = c.chat(&ChatRequest::free_form(vec![Message::user("hi")])).unwrap_err();
        assert!(matches!(err, ClientError::Transport(_) | ClientError::Timeout), "{err:?}");
    }

    /// Set DIALOGUEKIT_NETWORK_TESTS=1 and DIALOGUEKIT_CHAT_ENDPOINT to run.
    #[test]
    fn real_endpoint_smoke() {
        if std::env::var("DIALOGUEKIT_NETWORK_TESTS").as_deref() != Ok("1") {
            return;
        }
        let cfg = ClientConfig {
            endpoint: std::env::var("DIALOGUEKIT_CHAT_ENDPOINT").expect("endpoint"),
            model: std::env::var("DIALOGUEKIT_CHAT_MODEL").unwrap_or_default(),
            api_key_env: Some("DIALOGUEKIT_API_KEY".into()),
            ..ClientConfig::default()
        };
        let out = HttpChat::new(cfg)
            .unwrap()
            .chat(&ChatRequest::free_form(vec![Message::user("Reply with the word ok.")]))
            .unwrap();
        assert!(!out.is_empty());
    }
}

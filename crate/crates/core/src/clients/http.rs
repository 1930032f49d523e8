use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{with_retries, ClientError, Generator, TextEmbedder, TokenEmbedder};
use crate::retrieval::TokenEmbeddingMatrix;
use crate::snippets::EmbeddingVector;

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_max_tokens() -> u32 {
    512
}

/// Settings for a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationClientConfig {
    /// Full URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub retry_count: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Environment variable holding a bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

impl GenerationClientConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            timeout_secs: default_timeout(),
            max_output_tokens: default_max_tokens(),
            temperature: 0.0,
            retry_count: default_retries(),
            backoff_ms: default_backoff_ms(),
            api_key_env: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        check_timeout(self.timeout_secs)
    }
}

fn check_timeout(secs: f64) -> Result<(), ClientError> {
    if secs.is_finite() && secs > 0.0 {
        Ok(())
    } else {
        Err(ClientError::Precondition(
            "timeout_secs must be positive".into(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    PerText,
    PerToken,
}

/// Settings for an embeddings endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingClientConfig {
    pub endpoint: String,
    pub model: String,
    pub mode: EmbeddingMode,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub retry_count: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub api_key_env: Option<String>,
}

impl EmbeddingClientConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, mode: EmbeddingMode) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            mode,
            timeout_secs: default_timeout(),
            retry_count: default_retries(),
            backoff_ms: default_backoff_ms(),
            api_key_env: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        check_timeout(self.timeout_secs)
    }
}

fn api_key(var: &Option<String>) -> Option<String> {
    var.as_ref().and_then(|v| std::env::var(v).ok())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Moves a JSON body to an endpoint and back.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, ClientError>;
}

/// Blocking HTTP transport.
#[derive(Debug, Clone, Default)]
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, ClientError> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout {
                    endpoint: url.to_string(),
                }
            } else {
                ClientError::Transport {
                    endpoint: url.to_string(),
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| ClientError::Transport {
            endpoint: url.to_string(),
            message: e.to_string(),
        })?;
        Ok(HttpResponse { status, body })
    }
}

/// A recorded request body and the response it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureExchange {
    pub request: Value,
    pub status: u16,
    pub response: Value,
}

/// Replays recorded exchanges, matching on the exact request body.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    exchanges: Vec<FixtureExchange>,
    calls: AtomicUsize,
}

impl FixtureTransport {
    pub fn new(exchanges: Vec<FixtureExchange>) -> Self {
        Self {
            exchanges,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ClientError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ClientError::Other(format!("{}: {e}", path.display())))?;
        let exchanges = serde_json::from_str(&raw)
            .map_err(|e| ClientError::Other(format!("{}: {e}", path.display())))?;
        Ok(Self::new(exchanges))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Transport for FixtureTransport {
    fn post_json(
        &self,
        url: &str,
        _bearer: Option<&str>,
        body: &Value,
        _timeout: Duration,
    ) -> Result<HttpResponse, ClientError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.exchanges
            .iter()
            .find(|x| &x.request == body)
            .map(|x| HttpResponse {
                status: x.status,
                body: x.response.to_string(),
            })
            .ok_or_else(|| ClientError::Transport {
                endpoint: url.to_string(),
                message: "no recorded exchange matches request".into(),
            })
    }
}

fn post_checked<T: Transport + ?Sized>(
    transport: &T,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    timeout: Duration,
) -> Result<Value, ClientError> {
    let resp = transport.post_json(url, bearer, body, timeout)?;
    if !(200..300).contains(&resp.status) {
        return Err(ClientError::Status {
            endpoint: url.to_string(),
            status: resp.status,
            body: resp.body,
        });
    }
    serde_json::from_str(&resp.body).map_err(|e| ClientError::InvalidResponse(e.to_string()))
}

/// Client for chat-completions style endpoints.
pub struct ChatCompletionsClient<T: Transport = ReqwestTransport> {
    config: GenerationClientConfig,
    transport: T,
}

impl ChatCompletionsClient<ReqwestTransport> {
    pub fn new(config: GenerationClientConfig) -> Result<Self, ClientError> {
        Self::with_transport(config, ReqwestTransport::default())
    }
}

impl<T: Transport> ChatCompletionsClient<T> {
    pub fn with_transport(
        config: GenerationClientConfig,
        transport: T,
    ) -> Result<Self, ClientError> {
        config.validate()?;
        Ok(Self { config, transport })
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// The JSON body sent for one call.
    pub fn request_body(&self, system: &str, user: &str) -> Value {
        json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        })
    }
}

impl<T: Transport> Generator for ChatCompletionsClient<T> {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn generate(&self, system: &str, user: &str) -> Result<String, ClientError> {
        if user.is_empty() {
            return Err(ClientError::Precondition("user message is empty".into()));
        }
        let body = self.request_body(system, user);
        let key = api_key(&self.config.api_key_env);
        let timeout = Duration::from_secs_f64(self.config.timeout_secs);
        let value = with_retries(
            self.config.retry_count,
            Duration::from_millis(self.config.backoff_ms),
            || {
                post_checked(
                    &self.transport,
                    &self.config.endpoint,
                    key.as_deref(),
                    &body,
                    timeout,
                )
            },
        )?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| {
                ClientError::InvalidResponse("missing choices[0].message.content".into())
            })
    }
}

/// Pulls `data[*].embedding` out of an embeddings response, ordered by `index`.
fn embedding_data(value: &Value, expected: usize) -> Result<Vec<Value>, ClientError> {
    let data = value
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| ClientError::InvalidResponse("missing data array".into()))?;
    if data.len() != expected {
        return Err(ClientError::InvalidResponse(format!(
            "expected {expected} embeddings, got {}",
            data.len()
        )));
    }
    let mut items: Vec<(u64, Value)> = data
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let idx = d.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
            let emb = d
                .get("embedding")
                .cloned()
                .ok_or_else(|| ClientError::InvalidResponse("missing embedding".into()))?;
            Ok((idx, emb))
        })
        .collect::<Result<_, ClientError>>()?;
    items.sort_by_key(|(i, _)| *i);
    Ok(items.into_iter().map(|(_, v)| v).collect())
}

fn float_row(v: &Value) -> Result<Vec<f64>, ClientError> {
    v.as_array()
        .ok_or_else(|| ClientError::InvalidResponse("embedding is not an array".into()))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| ClientError::InvalidResponse("non-numeric embedding value".into()))
        })
        .collect()
}

struct EmbeddingsEndpoint<T> {
    config: EmbeddingClientConfig,
    transport: T,
}

impl<T: Transport> EmbeddingsEndpoint<T> {
    fn call(&self, input: &[&str]) -> Result<Vec<Value>, ClientError> {
        let body = json!({"model": self.config.model, "input": input});
        let key = api_key(&self.config.api_key_env);
        let timeout = Duration::from_secs_f64(self.config.timeout_secs);
        let value = with_retries(
            self.config.retry_count,
            Duration::from_millis(self.config.backoff_ms),
            || {
                post_checked(
                    &self.transport,
                    &self.config.endpoint,
                    key.as_deref(),
                    &body,
                    timeout,
                )
            },
        )?;
        embedding_data(&value, input.len())
    }
}

/// Embeddings endpoint returning one vector per input text.
pub struct HttpTextEmbedder<T: Transport = ReqwestTransport> {
    inner: EmbeddingsEndpoint<T>,
}

impl HttpTextEmbedder<ReqwestTransport> {
    pub fn new(config: EmbeddingClientConfig) -> Result<Self, ClientError> {
        Self::with_transport(config, ReqwestTransport::default())
    }
}

impl<T: Transport> HttpTextEmbedder<T> {
    pub fn with_transport(
        config: EmbeddingClientConfig,
        transport: T,
    ) -> Result<Self, ClientError> {
        if config.mode != EmbeddingMode::PerText {
            return Err(ClientError::Precondition(
                "text embedder needs mode per_text".into(),
            ));
        }
        config.validate()?;
        Ok(Self {
            inner: EmbeddingsEndpoint { config, transport },
        })
    }
}

impl<T: Transport> TextEmbedder for HttpTextEmbedder<T> {
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ClientError> {
        if texts.is_empty() {
            return Err(ClientError::Precondition("no texts to embed".into()));
        }
        let rows = self.inner.call(texts)?;
        let mut out = Vec::with_capacity(rows.len());
        for row in &rows {
            let values = float_row(row)?;
            if let Some(first) = out.first().map(|v: &EmbeddingVector| v.dim()) {
                if values.len() != first {
                    return Err(ClientError::DimensionMismatch {
                        expected: first,
                        found: values.len(),
                    });
                }
            }
            out.push(
                EmbeddingVector::new(values)
                    .map_err(|e| ClientError::InvalidResponse(e.to_string()))?,
            );
        }
        Ok(out)
    }
}

/// Embeddings endpoint returning a matrix (one row per token) per input text.
pub struct HttpTokenEmbedder<T: Transport = ReqwestTransport> {
    inner: EmbeddingsEndpoint<T>,
}

impl HttpTokenEmbedder<ReqwestTransport> {
    pub fn new(config: EmbeddingClientConfig) -> Result<Self, ClientError> {
        Self::with_transport(config, ReqwestTransport::default())
    }
}

impl<T: Transport> HttpTokenEmbedder<T> {
    pub fn with_transport(
        config: EmbeddingClientConfig,
        transport: T,
    ) -> Result<Self, ClientError> {
        if config.mode != EmbeddingMode::PerToken {
            return Err(ClientError::Precondition(
                "token embedder needs mode per_token".into(),
            ));
        }
        config.validate()?;
        Ok(Self {
            inner: EmbeddingsEndpoint { config, transport },
        })
    }
}

impl<T: Transport> TokenEmbedder for HttpTokenEmbedder<T> {
    fn id(&self) -> String {
        format!("http:{}", self.inner.config.model)
    }

    fn embed_tokens(&self, text: &str) -> Result<TokenEmbeddingMatrix, ClientError> {
        if text.is_empty() {
            return Err(ClientError::Precondition("cannot embed empty text".into()));
        }
        let rows = self.inner.call(&[text])?;
        let rows = rows[0].as_array().ok_or_else(|| {
            ClientError::InvalidResponse("token embedding is not a matrix".into())
        })?;
        let rows: Vec<Vec<f64>> = rows.iter().map(float_row).collect::<Result<_, _>>()?;
        TokenEmbeddingMatrix::from_rows_normalized(&rows)
            .map_err(|e| ClientError::InvalidResponse(e.to_string()))
    }
}

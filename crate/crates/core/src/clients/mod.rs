//! Generation and embedding backends.
//!
//! Three protocols are used by the pipeline: chat-style text generation,
//! one-vector-per-text embeddings (snippet filtering) and one-vector-per-token
//! embeddings (late-interaction retrieval). Each has an HTTP implementation
//! speaking the common chat-completions / embeddings JSON shapes and a set of
//! deterministic mocks.

mod http;
mod mock;

use std::time::Duration;

use thiserror::Error;

use crate::retrieval::TokenEmbeddingMatrix;
use crate::snippets::EmbeddingVector;

pub use http::{
    ChatCompletionsClient, EmbeddingClientConfig, EmbeddingMode, FixtureExchange, FixtureTransport,
    GenerationClientConfig, HttpResponse, HttpTextEmbedder, HttpTokenEmbedder, ReqwestTransport,
    Transport,
};
pub use mock::{
    EchoGenerator, FailingGenerator, FnGenerator, HashTextEmbedder, HashTokenEmbedder,
    MockResearchGenerator, ScriptedGenerator, ScriptedTextEmbedder,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ClientError {
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("HTTP {status} from {endpoint}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("malformed response: {0}")]
    InvalidResponse(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("scripted client has no replies left")]
    ScriptExhausted,
    #[error("{0}")]
    Other(String),
}

impl ClientError {
    /// Whether a retry might succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ClientError::Transport { .. } | ClientError::Timeout { .. } => true,
            ClientError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Chat-style text generation.
pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, system: &str, user: &str) -> Result<String, ClientError>;
}

/// One embedding vector per input text, order-aligned.
pub trait TextEmbedder: Send + Sync {
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ClientError>;

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector, ClientError> {
        self.embed_texts(&[text])?
            .pop()
            .ok_or_else(|| ClientError::InvalidResponse("no embedding returned".into()))
    }
}

/// One unit-normalized embedding row per token.
pub trait TokenEmbedder: Send + Sync {
    /// Stable identifier recorded in index metadata.
    fn id(&self) -> String;

    fn embed_tokens(&self, text: &str) -> Result<TokenEmbeddingMatrix, ClientError>;
}

impl<G: Generator + ?Sized> Generator for std::sync::Arc<G> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn generate(&self, system: &str, user: &str) -> Result<String, ClientError> {
        (**self).generate(system, user)
    }
}

impl<E: TextEmbedder + ?Sized> TextEmbedder for std::sync::Arc<E> {
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ClientError> {
        (**self).embed_texts(texts)
    }
}

impl<E: TokenEmbedder + ?Sized> TokenEmbedder for std::sync::Arc<E> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn embed_tokens(&self, text: &str) -> Result<TokenEmbeddingMatrix, ClientError> {
        (**self).embed_tokens(text)
    }
}

/// Runs `op` up to `retry_count + 1` times, sleeping `backoff * 2^attempt`
/// between transient failures.
pub fn with_retries<T>(
    retry_count: u32,
    backoff: Duration,
    mut op: impl FnMut() -> Result<T, ClientError>,
) -> Result<T, ClientError> {
    let mut attempt = 0;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(e) if e.is_transient() && attempt < retry_count => {
                let delay = backoff.saturating_mul(1 << attempt.min(16));
                tracing::warn!(attempt, ?delay, error = %e, "retrying");
                std::thread::sleep(delay);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

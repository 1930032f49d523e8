//! Late-interaction passage retrieval.
//!
//! Documents are cut into fixed-size token passages, every passage token gets
//! its own unit vector, and a query is scored against a passage by MaxSim.
//! Scoring data ([`Index`]) and passage bodies ([`ContentStore`]) are separate
//! structures so the text can be hosted once while many searches run.

mod index;
mod matrix;
mod maxsim;
pub mod persist;
mod search;
mod segment;
mod service;
mod tokenizer;

use thiserror::Error;

use crate::clients::ClientError;
use crate::types::PassageKey;

pub use index::{build_index, ContentStore, Index, IndexMetadata};
pub use matrix::{MatrixError, TokenEmbeddingMatrix};
pub use maxsim::maxsim_score;
pub use search::{
    batch_search, fetch_content, search, search_embedded, EmbeddingSource, PassageLookup, SearchHit,
};
pub use segment::{segment_corpus, segment_document};
pub use service::{LocalRetriever, RetrievalResult, RetrievalService, RetrievalStats, Retriever};
pub use tokenizer::{Tokenizer, WhitespaceTokenizer};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding {what} failed: {source}")]
    Embedder {
        what: String,
        #[source]
        source: ClientError,
    },
    #[error("passage {0} is not in the content store")]
    MissingPassage(PassageKey),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("retrieval service is not running")]
    ServiceUnavailable,
}

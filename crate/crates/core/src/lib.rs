//! Research-then-answer retrieval-augmented generation.
//!
//! A question is answered in two stages. The research stage retrieves passages
//! from a late-interaction index, asks a model for follow-up search queries,
//! retrieves again, then chunks the passages into snippets and keeps those
//! close to the question. The response stage orders the surviving snippets by
//! retrieval provenance, renders them into the answer prompt and asks a model
//! for the final answer.
//!
//! Model backends sit behind the traits in [`clients`]; deterministic mocks are
//! provided for offline runs and tests.

pub mod answer;
pub mod clients;
pub mod config;
pub mod jsonl;
pub mod pipeline;
pub mod querygen;
pub mod retrieval;
pub mod snippets;
pub mod template;
pub mod types;

pub use config::PipelineConfig;
pub use types::{
    AnswerRecord, AnswerStats, Document, Passage, PassageKey, QueryResult, Question,
    ResearchContext, Snippet,
};

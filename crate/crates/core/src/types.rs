//! Domain types shared across the pipeline.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// An input task with a stable id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "question")]
    pub text: String,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// A corpus document, one per line of the corpus JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// Identifies a passage: the document it came from and its ordinal within it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PassageKey {
    pub doc_id: String,
    pub passage_index: usize,
}

impl PassageKey {
    pub fn new(doc_id: impl Into<String>, passage_index: usize) -> Self {
        Self {
            doc_id: doc_id.into(),
            passage_index,
        }
    }
}

impl std::fmt::Display for PassageKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.passage_index)
    }
}

/// A fixed-size token segment of a document; the unit of indexing and retrieval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub passage_index: usize,
    /// `[start, end)` token offsets within the document.
    #[serde(default)]
    pub token_span: (usize, usize),
    pub text: String,
}

impl Passage {
    pub fn key(&self) -> PassageKey {
        PassageKey::new(self.doc_id.clone(), self.passage_index)
    }

    pub fn num_tokens(&self) -> usize {
        self.token_span.1 - self.token_span.0
    }
}

/// A character window of a passage.
///
/// `char_span` counts unicode scalar values, not bytes. `similarity` is unset
/// until the snippet has been scored against its question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snippet {
    pub doc_id: String,
    pub passage_index: usize,
    pub char_span: (usize, usize),
    pub text: String,
    pub similarity: Option<f64>,
}

impl Snippet {
    pub fn passage_key(&self) -> PassageKey {
        PassageKey::new(self.doc_id.clone(), self.passage_index)
    }

    pub fn char_range(&self) -> Range<usize> {
        self.char_span.0..self.char_span.1
    }
}

/// Ranked passages returned for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query: String,
    /// Rank order; rank of `passages[i]` is `i + 1`.
    pub passages: Vec<Passage>,
}

/// Everything gathered during the research stage for one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchContext {
    pub question: Question,
    pub generated_queries: Vec<String>,
    /// Ordered `[generated 1, .., generated n, original question]`.
    pub per_query_results: Vec<QueryResult>,
    /// Snippets that survived filtering, in prompt order.
    pub snippets: Vec<Snippet>,
    /// Non-fatal problems hit while researching (dropped snippets, short query lists).
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ResearchContext {
    pub fn total_passages(&self) -> usize {
        self.per_query_results
            .iter()
            .map(|r| r.passages.len())
            .sum()
    }
}

/// Counts used for the per-question histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnswerStats {
    pub num_unique_docs: usize,
    pub num_snippets: usize,
    pub prompt_chars: usize,
}

/// Final output for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub answer: String,
    pub doc_ids: Vec<String>,
    pub final_prompt: String,
    pub stats: AnswerStats,
}

impl AnswerRecord {
    /// Builds a record and derives its stats from its own content.
    pub fn new(
        question_id: impl Into<String>,
        answer: impl Into<String>,
        doc_ids: Vec<String>,
        final_prompt: impl Into<String>,
        num_snippets: usize,
    ) -> Self {
        let final_prompt = final_prompt.into();
        let stats = AnswerStats {
            num_unique_docs: doc_ids.len(),
            num_snippets,
            prompt_chars: final_prompt.chars().count(),
        };
        Self {
            question_id: question_id.into(),
            answer: answer.into(),
            doc_ids,
            final_prompt,
            stats,
        }
    }
}

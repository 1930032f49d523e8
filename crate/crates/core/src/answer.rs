//! Response generation: snippet ordering, prompt assembly and the final call.
//!
//! Snippets are not ordered by similarity. They follow the order in which
//! their passages were retrieved: generated queries first, then the original
//! question; within a query by passage rank; within a passage by position.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::clients::{ClientError, Generator};
use crate::template::{PromptTemplate, TemplateError};
use crate::types::{AnswerRecord, PassageKey, Question, ResearchContext, Snippet};

pub const ANSWER_TEMPLATE: &str = include_str!("../resources/answer_prompt.txt");

/// The system message sent with the answer prompt.
pub const ANSWER_SYSTEM: &str = "";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnswerError {
    #[error("total_words must be at least 1")]
    NoWords,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("generation failed for question {question_id}: {source}")]
    Client {
        question_id: String,
        #[source]
        source: ClientError,
    },
}

/// Where a snippet came from, used as its sort key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    /// Position in `per_query_results`.
    pub query_ordinal: usize,
    /// 1-based rank of the passage for that query.
    pub passage_rank: usize,
    pub char_start: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrderedContext {
    pub snippets: Vec<Snippet>,
    pub provenance: Vec<Provenance>,
}

impl OrderedContext {
    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }
}

/// Sorts the context's snippets by `(query, passage rank, char start)`.
///
/// A passage retrieved by several queries is expected to contribute a copy of
/// each snippet per retrieval; the n-th copy is placed at the passage's n-th
/// retrieval position. Snippets whose passage was never retrieved sort last.
pub fn order_snippets(ctx: &ResearchContext) -> OrderedContext {
    let mut positions: HashMap<PassageKey, Vec<(usize, usize)>> = HashMap::new();
    for (q, result) in ctx.per_query_results.iter().enumerate() {
        for (r, p) in result.passages.iter().enumerate() {
            positions.entry(p.key()).or_default().push((q, r + 1));
        }
    }

    let mut copies: HashMap<(PassageKey, usize), usize> = HashMap::new();
    let mut keyed: Vec<(Provenance, &Snippet)> = ctx
        .snippets
        .iter()
        .map(|s| {
            let key = s.passage_key();
            let seen = copies.entry((key.clone(), s.char_span.0)).or_insert(0);
            let (query_ordinal, passage_rank) = positions
                .get(&key)
                .map(|ps| ps[(*seen).min(ps.len() - 1)])
                .unwrap_or((usize::MAX, usize::MAX));
            *seen += 1;
            let prov = Provenance {
                query_ordinal,
                passage_rank,
                char_start: s.char_span.0,
            };
            (prov, s)
        })
        .collect();
    keyed.sort_by_key(|(p, _)| *p);

    let (provenance, snippets) = keyed.into_iter().map(|(p, s)| (p, s.clone())).unzip();
    OrderedContext {
        snippets,
        provenance,
    }
}

/// Snippet texts in order, newline separated.
pub fn assemble_context(ordered: &OrderedContext) -> String {
    ordered
        .snippets
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_answer_prompt(
    context: &str,
    question: &str,
    total_words: usize,
) -> Result<String, AnswerError> {
    if total_words == 0 {
        return Err(AnswerError::NoWords);
    }
    let words = total_words.to_string();
    Ok(PromptTemplate::parse(ANSWER_TEMPLATE).render(&[
        ("context", context),
        ("question", question),
        ("total_words", &words),
    ])?)
}

/// Document ids in first-occurrence order over the per-query passage lists.
pub fn dedup_documents(ctx: &ResearchContext) -> Vec<String> {
    let mut seen = HashSet::new();
    ctx.per_query_results
        .iter()
        .flat_map(|r| &r.passages)
        .filter(|p| seen.insert(p.doc_id.as_str()))
        .map(|p| p.doc_id.clone())
        .collect()
}

/// Builds the prompt from `ordered`, calls the model and packages the record.
pub fn generate_answer(
    ordered: &OrderedContext,
    question: &Question,
    doc_ids: Vec<String>,
    client: &dyn Generator,
    total_words: usize,
) -> Result<AnswerRecord, AnswerError> {
    let prompt = build_answer_prompt(&assemble_context(ordered), &question.text, total_words)?;
    let answer = client
        .generate(ANSWER_SYSTEM, &prompt)
        .map_err(|source| AnswerError::Client {
            question_id: question.id.clone(),
            source,
        })?;
    Ok(AnswerRecord::new(
        &question.id,
        answer,
        doc_ids,
        prompt,
        ordered.len(),
    ))
}

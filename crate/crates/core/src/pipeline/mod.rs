//! End-to-end orchestration: research, then respond.

mod runner;
mod stats;

use std::sync::Arc;

use thiserror::Error;

use crate::answer::{
    dedup_documents, generate_answer, order_snippets, AnswerError, OrderedContext,
};
use crate::clients::{Generator, TextEmbedder};
use crate::config::{ConfigError, PipelineConfig};
use crate::jsonl::JsonlError;
use crate::querygen::{build_initial_context, generate_queries, QueryGenError, QueryGenRequest};
use crate::retrieval::{RetrievalError, Retriever};
use crate::snippets::{chunk_passage, filter_snippets, SnippetError};
use crate::types::{AnswerRecord, QueryResult, Question, ResearchContext};

pub use runner::{
    run_batch, run_questions, shard_ranges, BatchOutput, QuestionReport, RunReport, RunSummary,
    Status,
};
pub use stats::{emit_stats, StatsLine, SummaryLine};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("retrieval failed for {query:?}: {source}")]
    Retrieval {
        query: String,
        #[source]
        source: RetrievalError,
    },
    #[error(transparent)]
    QueryGen(#[from] QueryGenError),
    #[error(transparent)]
    Snippets(#[from] SnippetError),
    #[error(transparent)]
    Answer(#[from] AnswerError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// The model clients used by one pipeline.
#[derive(Clone)]
pub struct Clients {
    pub querygen: Arc<dyn Generator>,
    pub answer: Arc<dyn Generator>,
    pub text_embedder: Arc<dyn TextEmbedder>,
}

/// Result of the research stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Research {
    pub context: ResearchContext,
    /// Query generation failed and only the original question was searched.
    pub fallback: bool,
}

fn retrieve_all(
    retriever: &dyn Retriever,
    queries: &[String],
    k: usize,
) -> Result<Vec<QueryResult>, PipelineError> {
    retriever
        .retrieve(queries, k)
        .into_iter()
        .zip(queries)
        .map(|(r, q)| {
            r.map(|passages| QueryResult {
                query: q.clone(),
                passages,
            })
            .map_err(|source| PipelineError::Retrieval {
                query: q.clone(),
                source,
            })
        })
        .collect()
}

/// Runs the research stage for one question.
///
/// 1. Retrieve `k_initial` passages for the question as context.
/// 2. Ask the query-generation model for `n_generated_queries` follow-ups.
/// 3. Retrieve `k_per_query` passages for each follow-up and for the question.
/// 4. Chunk every retrieved passage and keep snippets similar enough to the question.
///
/// If step 2 fails, the question alone is searched and `fallback` is set.
pub fn conduct_research(
    question: &Question,
    retriever: &dyn Retriever,
    clients: &Clients,
    config: &PipelineConfig,
) -> Result<Research, PipelineError> {
    config.validate()?;
    let mut warnings = Vec::new();

    let initial = retrieve_all(
        retriever,
        std::slice::from_ref(&question.text),
        config.k_initial,
    )?
    .pop()
    .map(|r| r.passages)
    .unwrap_or_default();
    let req = QueryGenRequest::new(
        question.text.clone(),
        build_initial_context(&initial),
        config.effective_date(),
        config.n_generated_queries,
    )?;

    let generated = match generate_queries(clients.querygen.as_ref(), &req) {
        Ok(parsed) => {
            if parsed.short {
                warnings.push(format!(
                    "query generation returned {} of {} queries",
                    parsed.queries.len(),
                    config.n_generated_queries
                ));
            }
            if parsed.truncated {
                warnings.push("query generation returned surplus queries; truncated".into());
            }
            parsed.queries
        }
        Err(e @ (QueryGenError::Parse(_) | QueryGenError::Client(_))) => {
            warnings.push(format!(
                "query generation failed, using the question alone: {e}"
            ));
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };
    let fallback = generated.is_empty();

    let mut queries = generated.clone();
    queries.push(question.text.clone());
    let per_query_results = retrieve_all(retriever, &queries, config.k_per_query)?;

    let mut candidates = Vec::new();
    for p in per_query_results.iter().flat_map(|r| &r.passages) {
        candidates.extend(chunk_passage(
            p,
            config.snippet_chars,
            config.snippet_overlap,
        )?);
    }
    let filtered = filter_snippets(
        question,
        candidates,
        clients.text_embedder.as_ref(),
        config.sim_threshold,
    )?;
    warnings.extend(filtered.warnings);

    Ok(Research {
        context: ResearchContext {
            question: question.clone(),
            generated_queries: generated,
            per_query_results,
            snippets: filtered.kept,
            warnings,
        },
        fallback,
    })
}

/// Runs the response stage: order snippets, build the prompt, generate.
pub fn generate_response(
    ctx: &ResearchContext,
    question: &Question,
    client: &dyn Generator,
    config: &PipelineConfig,
) -> Result<AnswerRecord, AnswerError> {
    let ordered = order_snippets(ctx);
    generate_answer(
        &ordered,
        question,
        dedup_documents(ctx),
        client,
        config.total_words,
    )
}

/// Sends the identical answer prompt to two generators.
pub fn compare_generators(
    ctx: &ResearchContext,
    question: &Question,
    client_a: &dyn Generator,
    client_b: &dyn Generator,
    config: &PipelineConfig,
) -> (
    Result<AnswerRecord, AnswerError>,
    Result<AnswerRecord, AnswerError>,
) {
    let ordered: OrderedContext = order_snippets(ctx);
    let docs = dedup_documents(ctx);
    let run = |c: &dyn Generator| {
        generate_answer(&ordered, question, docs.clone(), c, config.total_words)
    };
    (run(client_a), run(client_b))
}

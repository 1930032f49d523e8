//! Batch execution over a question file.
//!
//! The question list is split into contiguous shards, one per worker. Workers
//! run concurrently and share a single [`Retriever`]; output is reassembled in
//! input order.

use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{conduct_research, generate_response, Clients, PipelineError};
use crate::config::PipelineConfig;
use crate::jsonl::{load_questions, write_jsonl, AnswerLine};
use crate::retrieval::Retriever;
use crate::types::Question;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Fallback,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionReport {
    pub id: String,
    pub status: Status,
    pub num_unique_docs: usize,
    pub num_snippets: usize,
    pub prompt_chars: usize,
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub questions: usize,
    pub ok: usize,
    pub fallback: usize,
    pub error: usize,
    pub total_unique_docs: usize,
    pub total_snippets: usize,
    pub total_prompt_chars: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// One entry per input question, in input order.
    pub questions: Vec<QuestionReport>,
    pub elapsed_ms: f64,
}

impl RunReport {
    pub fn summary(&self) -> RunSummary {
        let mut s = RunSummary {
            questions: self.questions.len(),
            elapsed_ms: self.elapsed_ms,
            ..RunSummary::default()
        };
        for q in &self.questions {
            match q.status {
                Status::Ok => s.ok += 1,
                Status::Fallback => s.fallback += 1,
                Status::Error => s.error += 1,
            }
            s.total_unique_docs += q.num_unique_docs;
            s.total_snippets += q.num_snippets;
            s.total_prompt_chars += q.prompt_chars;
        }
        s
    }

    pub fn error_count(&self) -> usize {
        self.questions
            .iter()
            .filter(|q| q.status == Status::Error)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub lines: Vec<AnswerLine>,
    pub report: RunReport,
}

/// Contiguous shard boundaries: `ceil(n / workers)` questions per shard.
pub fn shard_ranges(n: usize, workers: usize) -> Vec<Range<usize>> {
    let size = n.div_ceil(workers.max(1)).max(1);
    (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
}

fn answer_one(
    question: &Question,
    retriever: &dyn Retriever,
    clients: &Clients,
    config: &PipelineConfig,
) -> (AnswerLine, QuestionReport) {
    let started = Instant::now();
    let mut report = QuestionReport {
        id: question.id.clone(),
        status: Status::Error,
        num_unique_docs: 0,
        num_snippets: 0,
        prompt_chars: 0,
        wall_time_ms: 0.0,
        warnings: Vec::new(),
        error: None,
    };
    let mut line = AnswerLine {
        id: question.id.clone(),
        answer: String::new(),
        doc_ids: Vec::new(),
        final_prompt: String::new(),
        error: None,
    };

    let outcome = conduct_research(question, retriever, clients, config).and_then(|research| {
        report.warnings = research.context.warnings.clone();
        let record =
            generate_response(&research.context, question, clients.answer.as_ref(), config)
                .map_err(PipelineError::from)?;
        Ok((research.fallback, record))
    });

    match outcome {
        Ok((fallback, record)) => {
            report.status = if fallback {
                Status::Fallback
            } else {
                Status::Ok
            };
            report.num_unique_docs = record.stats.num_unique_docs;
            report.num_snippets = record.stats.num_snippets;
            report.prompt_chars = record.stats.prompt_chars;
            line = AnswerLine::from(&record);
        }
        Err(e) => {
            tracing::warn!(id = %question.id, error = %e, "question failed");
            report.error = Some(e.to_string());
            line.error = Some(e.to_string());
        }
    }
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    (line, report)
}

/// Answers `questions` with `n_workers` concurrent workers.
///
/// Failures are recorded per question; the batch always completes.
pub fn run_questions(
    questions: &[Question],
    retriever: &dyn Retriever,
    clients: &Clients,
    config: &PipelineConfig,
    n_workers: usize,
) -> BatchOutput {
    let started = Instant::now();
    let shards = shard_ranges(questions.len(), n_workers);

    let mut results: Vec<(AnswerLine, QuestionReport)> = std::thread::scope(|s| {
        let handles: Vec<_> = shards
            .into_iter()
            .map(|range| {
                let shard = &questions[range];
                s.spawn(move || {
                    shard
                        .iter()
                        .map(|q| answer_one(q, retriever, clients, config))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("pipeline worker panicked"))
            .collect()
    });
    // shards are joined in order, so results are already in input order
    debug_assert!(results
        .iter()
        .zip(questions)
        .all(|((l, _), q)| l.id == q.id));

    let (lines, reports) = results.drain(..).unzip();
    BatchOutput {
        lines,
        report: RunReport {
            questions: reports,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    }
}

/// Reads questions from `questions_path`, answers them and writes one JSONL
/// line per question to `output_path` in input order.
pub fn run_batch(
    questions_path: &Path,
    output_path: &Path,
    retriever: &dyn Retriever,
    clients: &Clients,
    config: &PipelineConfig,
    n_workers: usize,
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let questions = load_questions(questions_path)?;
    let out = run_questions(&questions, retriever, clients, config, n_workers);
    write_jsonl(&out.lines, output_path)?;
    Ok(out.report)
}

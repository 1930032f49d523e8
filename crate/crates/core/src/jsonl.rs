//! JSONL readers and writers for questions, corpora and answers.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{AnswerRecord, Document, Question};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: {what} must not be empty")]
    Empty {
        path: PathBuf,
        line: usize,
        what: &'static str,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> JsonlError + '_ {
    move |source| JsonlError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads one `T` per non-blank line. Returned pairs carry 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, JsonlError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), JsonlError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Loads `{"id", "question"}` lines in file order, rejecting duplicate ids.
pub fn load_questions(path: &Path) -> Result<Vec<Question>, JsonlError> {
    let rows: Vec<(usize, Question)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, q) in rows {
        let empty = |what| JsonlError::Empty {
            path: path.to_path_buf(),
            line,
            what,
        };
        if q.id.is_empty() {
            return Err(empty("id"));
        }
        if q.text.is_empty() {
            return Err(empty("question"));
        }
        if !seen.insert(q.id.clone()) {
            return Err(JsonlError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: q.id,
            });
        }
        out.push(q);
    }
    Ok(out)
}

/// Loads a `{"doc_id", "text"}` corpus, rejecting duplicate document ids.
pub fn load_documents(path: &Path) -> Result<Vec<Document>, JsonlError> {
    let rows: Vec<(usize, Document)> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, d) in rows {
        if d.doc_id.is_empty() {
            return Err(JsonlError::Empty {
                path: path.to_path_buf(),
                line,
                what: "doc_id",
            });
        }
        if !seen.insert(d.doc_id.clone()) {
            return Err(JsonlError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: d.doc_id,
            });
        }
        out.push(d);
    }
    Ok(out)
}

/// One line of the answers file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLine {
    pub id: String,
    pub answer: String,
    pub doc_ids: Vec<String>,
    pub final_prompt: String,
    /// Set only for questions that could not be answered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&AnswerRecord> for AnswerLine {
    fn from(r: &AnswerRecord) -> Self {
        Self {
            id: r.question_id.clone(),
            answer: r.answer.clone(),
            doc_ids: r.doc_ids.clone(),
            final_prompt: r.final_prompt.clone(),
            error: None,
        }
    }
}

pub fn write_answers(records: &[AnswerRecord], path: &Path) -> Result<(), JsonlError> {
    let lines: Vec<AnswerLine> = records.iter().map(AnswerLine::from).collect();
    write_jsonl(&lines, path)
}

pub fn read_answers(path: &Path) -> Result<Vec<AnswerLine>, JsonlError> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, a)| a).collect())
}

//! Character-window snippets and similarity filtering.

use std::collections::HashMap;

use thiserror::Error;

use crate::clients::{ClientError, TextEmbedder};
use crate::types::{Passage, Question, Snippet};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SnippetError {
    #[error("overlap ({overlap}) must be smaller than window size ({size})")]
    BadWindow { size: usize, overlap: usize },
    #[error("embedding vector must have at least one dimension")]
    EmptyVector,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("threshold {0} is outside [-1, 1]")]
    Threshold(f64),
    #[error("could not embed the question: {0}")]
    QuestionEmbedding(ClientError),
}

/// A single dense embedding of a whole text.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SnippetError> {
        if values.is_empty() {
            return Err(SnippetError::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SnippetError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Splits a passage into windows of `size_chars` characters advancing by
/// `size_chars - overlap_chars`. The last window ends at the end of the text;
/// no window is emitted once the text is fully covered.
pub fn chunk_passage(
    passage: &Passage,
    size_chars: usize,
    overlap_chars: usize,
) -> Result<Vec<Snippet>, SnippetError> {
    if overlap_chars >= size_chars {
        return Err(SnippetError::BadWindow {
            size: size_chars,
            overlap: overlap_chars,
        });
    }
    let text = passage.text.as_str();
    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect();
    let len = bounds.len() - 1;
    let stride = size_chars - overlap_chars;

    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + size_chars).min(len);
        out.push(Snippet {
            doc_id: passage.doc_id.clone(),
            passage_index: passage.passage_index,
            char_span: (start, end),
            text: text[bounds[start]..bounds[end]].to_string(),
            similarity: None,
        });
        if end == len {
            break;
        }
        start += stride;
    }
    Ok(out)
}

/// `<a, b> / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SnippetError> {
    if a.dim() != b.dim() {
        return Err(SnippetError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(SnippetError::ZeroVector);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Snippets that passed the filter plus anything dropped along the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Snippet>,
    pub warnings: Vec<String>,
}

/// Keeps the snippets whose cosine similarity to the question is at least
/// `threshold`, in input order, each annotated with its similarity.
///
/// Each distinct snippet text is embedded once. A snippet whose embedding
/// fails is dropped with a warning.
pub fn filter_snippets(
    question: &Question,
    snippets: Vec<Snippet>,
    embedder: &dyn TextEmbedder,
    threshold: f64,
) -> Result<FilterOutcome, SnippetError> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(SnippetError::Threshold(threshold));
    }
    if snippets.is_empty() {
        return Ok(FilterOutcome::default());
    }
    let q = embedder
        .embed_text(&question.text)
        .map_err(SnippetError::QuestionEmbedding)?;

    let mut unique: Vec<&str> = Vec::new();
    let mut slot_of: HashMap<&str, usize> = HashMap::new();
    let slots: Vec<usize> = snippets
        .iter()
        .map(|s| {
            *slot_of.entry(s.text.as_str()).or_insert_with(|| {
                unique.push(s.text.as_str());
                unique.len() - 1
            })
        })
        .collect();
    let sims: Vec<Result<f64, String>> = embed_each(embedder, &unique)
        .into_iter()
        .map(|e| {
            let v = e.map_err(|e| e.to_string())?;
            cosine_similarity(&q, &v).map_err(|e| e.to_string())
        })
        .collect();

    let mut out = FilterOutcome::default();
    for (mut s, slot) in snippets.into_iter().zip(slots) {
        match &sims[slot] {
            Ok(sim) => {
                if *sim >= threshold {
                    s.similarity = Some(*sim);
                    out.kept.push(s);
                }
            }
            Err(e) => out.warnings.push(format!(
                "dropped snippet {}#{}@{}: {e}",
                s.doc_id, s.passage_index, s.char_span.0
            )),
        }
    }
    Ok(out)
}

/// Embeds all texts in one call; if that fails, falls back to one call per
/// text so a single bad input only loses itself.
fn embed_each(
    embedder: &dyn TextEmbedder,
    texts: &[&str],
) -> Vec<Result<EmbeddingVector, ClientError>> {
    match embedder.embed_texts(texts) {
        Ok(vs) if vs.len() == texts.len() => vs.into_iter().map(Ok).collect(),
        _ => texts.iter().map(|t| embedder.embed_text(t)).collect(),
    }
}

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{EmbeddingSource, PassageLookup};
use super::{RetrievalError, TokenEmbeddingMatrix};
use crate::clients::TokenEmbedder;
use crate::types::{Passage, PassageKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMetadata {
    /// Zero only for an empty index.
    pub dim: usize,
    pub passage_tokens: usize,
    pub embedder: String,
}

/// Scoring side of the index: passage keys and their token embeddings.
/// Holds no passage text.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    metadata: IndexMetadata,
    table: Vec<PassageKey>,
    embeddings: Vec<TokenEmbeddingMatrix>,
}

impl Index {
    pub fn from_parts(
        metadata: IndexMetadata,
        table: Vec<PassageKey>,
        embeddings: Vec<TokenEmbeddingMatrix>,
    ) -> Result<Self, RetrievalError> {
        if table.len() != embeddings.len() {
            return Err(RetrievalError::Corrupt(format!(
                "{} passage keys but {} embedding matrices",
                table.len(),
                embeddings.len()
            )));
        }
        if let Some(m) = embeddings.iter().find(|m| m.dim() != metadata.dim) {
            return Err(RetrievalError::DimensionMismatch {
                expected: metadata.dim,
                found: m.dim(),
            });
        }
        Ok(Self {
            metadata,
            table,
            embeddings,
        })
    }

    pub fn metadata(&self) -> &IndexMetadata {
        &self.metadata
    }

    pub fn passage_table(&self) -> &[PassageKey] {
        &self.table
    }

    pub fn embeddings(&self) -> &[TokenEmbeddingMatrix] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingSource for Index {
    fn dim(&self) -> usize {
        self.metadata.dim
    }
    fn len(&self) -> usize {
        self.table.len()
    }
    fn key(&self, i: usize) -> &PassageKey {
        &self.table[i]
    }
    fn matrix(&self, i: usize) -> &TokenEmbeddingMatrix {
        &self.embeddings[i]
    }
}

/// Passage bodies, kept apart from the scoring index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContentStore {
    passages: Vec<Passage>,
    by_key: HashMap<PassageKey, usize>,
    /// doc_id -> passage indices present for that document
    documents: BTreeMap<String, Vec<usize>>,
}

impl ContentStore {
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self, RetrievalError> {
        let mut by_key = HashMap::with_capacity(passages.len());
        let mut documents: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in passages.iter().enumerate() {
            if by_key.insert(p.key(), i).is_some() {
                return Err(RetrievalError::Corrupt(format!(
                    "duplicate passage {}",
                    p.key()
                )));
            }
            documents
                .entry(p.doc_id.clone())
                .or_default()
                .push(p.passage_index);
        }
        Ok(Self {
            passages,
            by_key,
            documents,
        })
    }

    pub fn get(&self, key: &PassageKey) -> Option<&Passage> {
        self.by_key.get(key).map(|&i| &self.passages[i])
    }

    /// Passage ordinals stored for a document.
    pub fn document_passages(&self, doc_id: &str) -> Option<&[usize]> {
        self.documents.get(doc_id).map(Vec::as_slice)
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    /// Whether every key of `index` resolves here and the sizes agree.
    pub fn covers(&self, index: &Index) -> bool {
        self.len() == index.len()
            && index
                .passage_table()
                .iter()
                .all(|k| self.by_key.contains_key(k))
    }
}

impl PassageLookup for ContentStore {
    fn lookup(&self, key: &PassageKey) -> Option<&Passage> {
        self.get(key)
    }
}

/// Embeds every passage and returns the paired scoring index and content store.
///
/// Rows are re-normalized regardless of what the embedder returns.
pub fn build_index(
    passages: Vec<Passage>,
    embedder: &dyn TokenEmbedder,
    passage_tokens: usize,
) -> Result<(Index, ContentStore), RetrievalError> {
    let embedded: Vec<TokenEmbeddingMatrix> = passages
        .par_iter()
        .map(|p| {
            let mut m =
                embedder
                    .embed_tokens(&p.text)
                    .map_err(|source| RetrievalError::Embedder {
                        what: format!("passage {}", p.key()),
                        source,
                    })?;
            m.normalize_rows()
                .map_err(|e| RetrievalError::Corrupt(format!("passage {}: {e}", p.key())))?;
            Ok(m)
        })
        .collect::<Result<_, RetrievalError>>()?;

    let dim = embedded.first().map_or(0, TokenEmbeddingMatrix::dim);
    if let Some(m) = embedded.iter().find(|m| m.dim() != dim) {
        return Err(RetrievalError::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    let metadata = IndexMetadata {
        dim,
        passage_tokens,
        embedder: embedder.id(),
    };
    let table = passages.iter().map(Passage::key).collect();
    let index = Index::from_parts(metadata, table, embedded)?;
    let store = ContentStore::from_passages(passages)?;
    Ok((index, store))
}

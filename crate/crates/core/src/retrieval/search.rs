use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maxsim::maxsim_score;
use super::{RetrievalError, TokenEmbeddingMatrix};
use crate::clients::TokenEmbedder;
use crate::types::{Passage, PassageKey};

/// Read access to scoring data. Search is generic over this so it cannot
/// reach passage text.
pub trait EmbeddingSource: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn key(&self, i: usize) -> &PassageKey;
    fn matrix(&self, i: usize) -> &TokenEmbeddingMatrix;
}

/// Read access to passage bodies.
pub trait PassageLookup {
    fn lookup(&self, key: &PassageKey) -> Option<&Passage>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub doc_id: String,
    pub passage_index: usize,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

impl SearchHit {
    pub fn key(&self) -> PassageKey {
        PassageKey::new(self.doc_id.clone(), self.passage_index)
    }
}

/// Higher score first; equal scores by ascending `(doc_id, passage_index)`.
fn hit_order<S: EmbeddingSource + ?Sized>(
    index: &S,
    a: &(f64, usize),
    b: &(f64, usize),
) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| index.key(a.1).cmp(index.key(b.1)))
}

/// Ranks every passage against an already-embedded query and keeps the top `k`.
pub fn search_embedded<S: EmbeddingSource + ?Sized>(
    index: &S,
    query: &TokenEmbeddingMatrix,
    k: usize,
) -> Result<Vec<SearchHit>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    if query.dim() != index.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: index.dim(),
            found: query.dim(),
        });
    }
    let mut scored = (0..index.len())
        .map(|i| Ok((maxsim_score(query, index.matrix(i))?, i)))
        .collect::<Result<Vec<_>, RetrievalError>>()?;

    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, |a, b| hit_order(index, a, b));
        scored.truncate(k);
    }
    scored.sort_by(|a, b| hit_order(index, a, b));

    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(r, (score, i))| {
            let key = index.key(i);
            SearchHit {
                doc_id: key.doc_id.clone(),
                passage_index: key.passage_index,
                score,
                rank: r + 1,
            }
        })
        .collect())
}

/// Embeds `query` and returns the `k` best passages by MaxSim.
pub fn search<S: EmbeddingSource + ?Sized>(
    index: &S,
    query: &str,
    embedder: &dyn TokenEmbedder,
    k: usize,
) -> Result<Vec<SearchHit>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidArgument(
            "k must be at least 1".into(),
        ));
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    let q = embedder
        .embed_tokens(query)
        .map_err(|source| RetrievalError::Embedder {
            what: format!("query {query:?}"),
            source,
        })?;
    search_embedded(index, &q, k)
}

/// Runs [`search`] for each query. Queries are scored in parallel but result
/// `i` is exactly what `search(queries[i])` would return.
pub fn batch_search<S, Q>(
    index: &S,
    queries: &[Q],
    embedder: &dyn TokenEmbedder,
    k: usize,
) -> Vec<Result<Vec<SearchHit>, RetrievalError>>
where
    S: EmbeddingSource + ?Sized,
    Q: AsRef<str> + Sync,
{
    queries
        .par_iter()
        .map(|q| search(index, q.as_ref(), embedder, k))
        .collect()
}

/// Resolves hits to full passages, preserving hit order.
pub fn fetch_content<L: PassageLookup + ?Sized>(
    store: &L,
    hits: &[SearchHit],
) -> Result<Vec<Passage>, RetrievalError> {
    hits.iter()
        .map(|h| {
            let key = h.key();
            store
                .lookup(&key)
                .cloned()
                .ok_or(RetrievalError::MissingPassage(key))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::HashTokenEmbedder;
    use crate::retrieval::{build_index, ContentStore};

    fn passage(doc: &str, i: usize, text: &str) -> Passage {
        Passage {
            doc_id: doc.into(),
            passage_index: i,
            token_span: (0, 1),
            text: text.into(),
        }
    }

    #[test]
    fn k_larger_than_corpus() {
        let emb = HashTokenEmbedder::new(8, 3);
        let (index, _) = build_index(vec![passage("a", 0, "hello world")], &emb, 450).unwrap();
        let hits = search(&index, "anything at all", &emb, 3).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].rank, 1);
    }

    #[test]
    fn ties_break_lexicographically() {
        let emb = HashTokenEmbedder::new(8, 3);
        let ps = vec![
            passage("b", 0, "same text"),
            passage("a", 1, "same text"),
            passage("a", 0, "other words entirely"),
        ];
        let (index, _) = build_index(ps, &emb, 450).unwrap();
        let hits = search(&index, "same text", &emb, 2).unwrap();
        assert_eq!(hits[0].score, hits[1].score);
        assert_eq!((hits[0].doc_id.as_str(), hits[0].passage_index), ("a", 1));
        assert_eq!((hits[1].doc_id.as_str(), hits[1].passage_index), ("b", 0));
    }

    #[test]
    fn empty_index_returns_nothing() {
        let emb = HashTokenEmbedder::new(8, 3);
        let (index, _) = build_index(vec![], &emb, 450).unwrap();
        assert!(search(&index, "q", &emb, 3).unwrap().is_empty());
    }

    #[test]
    fn zero_k_rejected() {
        let emb = HashTokenEmbedder::new(8, 3);
        let (index, _) = build_index(vec![passage("a", 0, "x")], &emb, 450).unwrap();
        assert!(search(&index, "q", &emb, 0).is_err());
    }

    #[test]
    fn batch_reports_failures_per_position() {
        let emb = HashTokenEmbedder::new(8, 3);
        let (index, _) = build_index(vec![passage("a", 0, "x y")], &emb, 450).unwrap();
        let out = batch_search(&index, &["x", "", "y"], &emb, 1);
        assert!(out[0].is_ok());
        assert!(matches!(out[1], Err(RetrievalError::Embedder { .. })));
        assert!(out[2].is_ok());
    }

    #[test]
    fn fetch_preserves_order_and_reports_missing() {
        let store = ContentStore::from_passages(vec![
            passage("a", 0, "A0"),
            passage("a", 1, "A1"),
            passage("b", 0, "B0"),
        ])
        .unwrap();
        let hit = |d: &str, i, r| SearchHit {
            doc_id: d.into(),
            passage_index: i,
            score: 0.0,
            rank: r,
        };
        let got = fetch_content(&store, &[hit("b", 0, 1), hit("a", 1, 2), hit("a", 0, 3)]).unwrap();
        let texts: Vec<&str> = got.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, ["B0", "A1", "A0"]);
        assert!(fetch_content(&store, &[]).unwrap().is_empty());

        let err = fetch_content(&store, &[hit("zz", 4, 1)]).unwrap_err();
        assert!(err.to_string().contains("zz#4"));
    }
}

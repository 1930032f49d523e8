//! A single retrieval service shared by all pipeline workers.
//!
//! Workers submit groups of queries; the service thread drains whatever is
//! queued, runs one [`batch_search`] per distinct `k`, resolves passage text
//! from the content store and replies to each caller.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::search::{batch_search, fetch_content, search};
use super::{ContentStore, Index, RetrievalError};
use crate::clients::TokenEmbedder;
use crate::types::Passage;

pub type RetrievalResult = Result<Vec<Passage>, RetrievalError>;

/// Anything that can turn queries into ranked passages with text attached.
pub trait Retriever: Send + Sync {
    /// One result per query, in query order.
    fn retrieve(&self, queries: &[String], k: usize) -> Vec<RetrievalResult>;
}

/// Counters describing how a retriever has been used.
#[derive(Debug, Default)]
pub struct RetrievalStats {
    queries: AtomicUsize,
    batches: AtomicUsize,
}

impl RetrievalStats {
    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }

    /// Number of `batch_search` invocations.
    pub fn batches(&self) -> usize {
        self.batches.load(Ordering::Relaxed)
    }
}

fn resolve(
    store: &ContentStore,
    hits: Result<Vec<super::SearchHit>, RetrievalError>,
) -> RetrievalResult {
    fetch_content(store, &hits?)
}

/// Searches in the calling thread.
pub struct LocalRetriever {
    index: Arc<Index>,
    store: Arc<ContentStore>,
    embedder: Arc<dyn TokenEmbedder>,
    stats: RetrievalStats,
}

impl LocalRetriever {
    pub fn new(
        index: Arc<Index>,
        store: Arc<ContentStore>,
        embedder: Arc<dyn TokenEmbedder>,
    ) -> Self {
        Self {
            index,
            store,
            embedder,
            stats: RetrievalStats::default(),
        }
    }

    pub fn stats(&self) -> &RetrievalStats {
        &self.stats
    }
}

impl Retriever for LocalRetriever {
    fn retrieve(&self, queries: &[String], k: usize) -> Vec<RetrievalResult> {
        self.stats
            .queries
            .fetch_add(queries.len(), Ordering::Relaxed);
        queries
            .iter()
            .map(|q| {
                resolve(
                    &self.store,
                    search(self.index.as_ref(), q, self.embedder.as_ref(), k),
                )
            })
            .collect()
    }
}

struct Job {
    queries: Vec<String>,
    k: usize,
    reply: Sender<Vec<RetrievalResult>>,
}

/// Background thread owning the index and content store.
pub struct RetrievalService {
    sender: Option<Sender<Job>>,
    worker: Option<JoinHandle<()>>,
    stats: Arc<RetrievalStats>,
}

impl RetrievalService {
    /// Starts the service. `max_batch` bounds the number of queries merged
    /// into one `batch_search` call.
    pub fn spawn(
        index: Arc<Index>,
        store: Arc<ContentStore>,
        embedder: Arc<dyn TokenEmbedder>,
        max_batch: usize,
    ) -> Self {
        let (tx, rx) = mpsc::channel();
        let stats = Arc::new(RetrievalStats::default());
        let worker_stats = Arc::clone(&stats);
        let worker = std::thread::Builder::new()
            .name("retrieval-service".into())
            .spawn(move || {
                serve(
                    rx,
                    &index,
                    &store,
                    embedder.as_ref(),
                    max_batch.max(1),
                    &worker_stats,
                )
            })
            .expect("spawn retrieval service thread");
        Self {
            sender: Some(tx),
            worker: Some(worker),
            stats,
        }
    }

    pub fn stats(&self) -> &RetrievalStats {
        &self.stats
    }
}

impl Retriever for RetrievalService {
    fn retrieve(&self, queries: &[String], k: usize) -> Vec<RetrievalResult> {
        let unavailable = || {
            queries
                .iter()
                .map(|_| Err(RetrievalError::ServiceUnavailable))
                .collect()
        };
        let Some(sender) = &self.sender else {
            return unavailable();
        };
        let (reply, rx) = mpsc::channel();
        let job = Job {
            queries: queries.to_vec(),
            k,
            reply,
        };
        if sender.send(job).is_err() {
            return unavailable();
        }
        rx.recv().unwrap_or_else(|_| unavailable())
    }
}

impl Drop for RetrievalService {
    fn drop(&mut self) {
        self.sender.take();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(
    rx: Receiver<Job>,
    index: &Index,
    store: &ContentStore,
    embedder: &dyn TokenEmbedder,
    max_batch: usize,
    stats: &RetrievalStats,
) {
    while let Ok(first) = rx.recv() {
        let mut pending = first.queries.len();
        let mut jobs = vec![first];
        while pending < max_batch {
            match rx.try_recv() {
                Ok(job) => {
                    pending += job.queries.len();
                    jobs.push(job);
                }
                Err(_) => break,
            }
        }

        let mut by_k: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, job) in jobs.iter().enumerate() {
            by_k.entry(job.k).or_default().push(i);
        }

        let mut answers: Vec<Option<Vec<RetrievalResult>>> = jobs.iter().map(|_| None).collect();
        for (k, members) in by_k {
            let flat: Vec<&str> = members
                .iter()
                .flat_map(|&i| jobs[i].queries.iter().map(String::as_str))
                .collect();
            stats.queries.fetch_add(flat.len(), Ordering::Relaxed);
            stats.batches.fetch_add(1, Ordering::Relaxed);
            let mut results = batch_search(index, &flat, embedder, k).into_iter();
            for i in members {
                let n = jobs[i].queries.len();
                answers[i] = Some(
                    results
                        .by_ref()
                        .take(n)
                        .map(|r| resolve(store, r))
                        .collect(),
                );
            }
        }

        for (job, answer) in jobs.into_iter().zip(answers) {
            // A caller that gave up waiting is not an error for the service.
            let _ = job.reply.send(answer.unwrap_or_default());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::HashTokenEmbedder;
    use crate::retrieval::build_index;

    fn fixture() -> (Arc<Index>, Arc<ContentStore>, Arc<dyn TokenEmbedder>) {
        let emb: Arc<dyn TokenEmbedder> = Arc::new(HashTokenEmbedder::new(16, 5));
        let passages = (0..30)
            .map(|i| Passage {
                doc_id: format!("d{}", i / 3),
                passage_index: i % 3,
                token_span: (0, 3),
                text: format!("topic{} word{} shared", i % 7, i),
            })
            .collect();
        let (index, store) = build_index(passages, emb.as_ref(), 450).unwrap();
        (Arc::new(index), Arc::new(store), emb)
    }

    #[test]
    fn service_matches_local_search_under_concurrency() {
        let (index, store, emb) = fixture();
        let local = LocalRetriever::new(index.clone(), store.clone(), emb.clone());
        let service = RetrievalService::spawn(index, store, emb, 64);

        std::thread::scope(|s| {
            for t in 0..4 {
                let (service, local) = (&service, &local);
                s.spawn(move || {
                    for r in 0..10 {
                        let qs: Vec<String> = (0..3)
                            .map(|j| format!("topic{} word{}", (t + j) % 7, r))
                            .collect();
                        let k = 1 + (r % 3);
                        let a = service.retrieve(&qs, k);
                        let b = local.retrieve(&qs, k);
                        assert_eq!(format!("{a:?}"), format!("{b:?}"));
                    }
                });
            }
        });
        assert_eq!(service.stats().queries(), 4 * 10 * 3);
        assert!(service.stats().batches() <= 40);
    }

    #[test]
    fn per_query_failures_stay_local() {
        let (index, store, emb) = fixture();
        let service = RetrievalService::spawn(index, store, emb, 8);
        let out = service.retrieve(&["topic1".into(), String::new()], 2);
        assert_eq!(out[0].as_ref().unwrap().len(), 2);
        assert!(out[1].is_err());
    }
}

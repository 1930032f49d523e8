mod common;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use ragresearch::clients::{
    ClientError, EchoGenerator, FailingGenerator, FnGenerator, Generator, HashTextEmbedder,
    HashTokenEmbedder, MockResearchGenerator, ScriptedGenerator,
};
use ragresearch::jsonl::write_jsonl;
use ragresearch::pipeline::{run_batch, run_questions, Clients, Status};
use ragresearch::retrieval::{
    build_index, persist, segment_corpus, LocalRetriever, RetrievalResult, RetrievalService,
    Retriever, WhitespaceTokenizer,
};
use ragresearch::{PipelineConfig, Question};

use common::*;

struct Fixture {
    index: Arc<ragresearch::retrieval::Index>,
    store: Arc<ragresearch::retrieval::ContentStore>,
    embedder: Arc<HashTokenEmbedder>,
}

fn fixture(seed: u64, docs: usize) -> Fixture {
    let mut r = rng(seed);
    let documents = random_documents(&mut r, docs, 20..900);
    let passages = segment_corpus(&documents, 450, &WhitespaceTokenizer).unwrap();
    let embedder = Arc::new(HashTokenEmbedder::new(16, seed));
    let (index, store) = build_index(passages, embedder.as_ref(), 450).unwrap();
    Fixture {
        index: Arc::new(index),
        store: Arc::new(store),
        embedder,
    }
}

fn mock_clients() -> Clients {
    Clients {
        querygen: Arc::new(MockResearchGenerator),
        answer: Arc::new(MockResearchGenerator),
        text_embedder: Arc::new(HashTextEmbedder::new(64, 11)),
    }
}

fn config() -> PipelineConfig {
    PipelineConfig {
        date: chrono::NaiveDate::from_ymd_opt(2025, 5, 1),
        ..PipelineConfig::default()
    }
}

/// Counts queries per `retrieve` call to check the per-question budget.
struct Counting<R> {
    inner: R,
    queries: AtomicUsize,
}

impl<R: Retriever> Retriever for Counting<R> {
    fn retrieve(&self, queries: &[String], k: usize) -> Vec<RetrievalResult> {
        self.queries.fetch_add(queries.len(), Ordering::Relaxed);
        self.inner.retrieve(queries, k)
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let f = fixture(3, 40);
    let dir = tempfile::tempdir().unwrap();
    let qpath = dir.path().join("q.jsonl");
    write_jsonl(&random_questions(&mut rng(4), 17), &qpath).unwrap();

    let mut outputs = Vec::new();
    for workers in [1, 2, 3] {
        let service =
            RetrievalService::spawn(f.index.clone(), f.store.clone(), f.embedder.clone(), 16);
        let out = dir.path().join(format!("a{workers}.jsonl"));
        let report =
            run_batch(&qpath, &out, &service, &mock_clients(), &config(), workers).unwrap();
        assert_eq!(report.error_count(), 0);
        assert_eq!(service.stats().queries(), 17 * 4);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn every_question_gets_exactly_one_line_in_order() {
    let f = fixture(5, 20);
    let retriever = LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone());
    let questions = random_questions(&mut rng(6), 9);
    let out = run_questions(&questions, &retriever, &mock_clients(), &config(), 4);
    let ids: Vec<_> = out.lines.iter().map(|l| l.id.as_str()).collect();
    let expect: Vec<_> = questions.iter().map(|q| q.id.as_str()).collect();
    assert_eq!(ids, expect);
    assert_eq!(out.report.questions.len(), 9);
    for (line, q) in out.lines.iter().zip(&questions) {
        assert!(line.answer.contains(&q.text));
        assert!(line.doc_ids.len() <= 9);
        let unique: HashSet<_> = line.doc_ids.iter().collect();
        assert_eq!(unique.len(), line.doc_ids.len());
    }
}

#[test]
fn at_most_four_queries_per_question() {
    let f = fixture(7, 30);
    let retriever = Counting {
        inner: LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone()),
        queries: AtomicUsize::new(0),
    };
    let questions = random_questions(&mut rng(8), 6);
    let out = run_questions(&questions, &retriever, &mock_clients(), &config(), 2);
    assert_eq!(out.report.error_count(), 0);
    assert_eq!(retriever.queries.load(Ordering::Relaxed), 6 * 4);

    let summary = out.report.summary();
    assert!(out.report.questions.iter().all(|q| q.num_unique_docs <= 9));
    assert_eq!(summary.ok, 6);
}

#[test]
fn answer_failures_become_error_lines() {
    let f = fixture(9, 10);
    let retriever = LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone());
    // fail only the answer for q001
    let answer: Arc<dyn Generator> = Arc::new(FnGenerator::new("picky", |_, user: &str| {
        if user.contains("poison") {
            Err(ClientError::Timeout {
                endpoint: "http://llm".into(),
            })
        } else {
            Ok("fine".into())
        }
    }));
    let clients = Clients {
        answer,
        ..mock_clients()
    };
    let questions = vec![
        Question::new("q000", "geese pond"),
        Question::new("q001", "poison pond"),
        Question::new("q002", "eggs cooked"),
    ];
    let out = run_questions(&questions, &retriever, &clients, &config(), 2);
    let status: Vec<_> = out.report.questions.iter().map(|q| q.status).collect();
    assert_eq!(status, [Status::Ok, Status::Error, Status::Ok]);
    assert!(out.lines[1].error.as_deref().unwrap().contains("q001"));
    assert_eq!(out.lines[1].answer, "");
    assert_eq!(out.lines[2].answer, "fine");
    assert_eq!(out.report.error_count(), 1);
}

#[test]
fn querygen_failures_fall_back_per_question() {
    let f = fixture(10, 10);
    let retriever = LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone());
    let clients = Clients {
        querygen: Arc::new(FailingGenerator(ClientError::Other("down".into()))),
        answer: Arc::new(EchoGenerator),
        text_embedder: Arc::new(HashTextEmbedder::new(64, 11)),
    };
    let questions = random_questions(&mut rng(12), 4);
    let out = run_questions(&questions, &retriever, &clients, &config(), 2);
    assert!(out
        .report
        .questions
        .iter()
        .all(|q| q.status == Status::Fallback));
    assert!(out.report.questions.iter().all(|q| q.num_unique_docs <= 3));
    assert!(out
        .lines
        .iter()
        .zip(&questions)
        .all(|(l, q)| l.answer.contains(&q.text)));
}

#[test]
fn persisted_index_answers_identically() {
    let f = fixture(13, 15);
    let dir = tempfile::tempdir().unwrap();
    persist::save(&f.index, &f.store, dir.path()).unwrap();
    let (index, store) = persist::load(dir.path()).unwrap();
    let embedder = Arc::new(HashTokenEmbedder::from_id(&index.metadata().embedder).unwrap());

    let questions = random_questions(&mut rng(14), 5);
    let a = LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone());
    let b = LocalRetriever::new(Arc::new(index), Arc::new(store), embedder);
    let out_a = run_questions(&questions, &a, &mock_clients(), &config(), 1);
    let out_b = run_questions(&questions, &b, &mock_clients(), &config(), 1);
    assert_eq!(out_a.lines, out_b.lines);
}

#[test]
fn scripted_queries_are_searched_in_order() {
    let f = fixture(15, 10);
    let retriever = LocalRetriever::new(f.index.clone(), f.store.clone(), f.embedder.clone());
    let clients = Clients {
        querygen: Arc::new(ScriptedGenerator::new([r#"```json
["geese pond", "eggs cooked", "extra"]
```"#])),
        ..mock_clients()
    };
    let q = Question::new("q", "bird flu");
    let res = ragresearch::pipeline::conduct_research(&q, &retriever, &clients, &config()).unwrap();
    let queries: Vec<_> = res
        .context
        .per_query_results
        .iter()
        .map(|r| r.query.as_str())
        .collect();
    assert_eq!(queries, ["geese pond", "eggs cooked", "bird flu"]);
    assert_eq!(res.context.warnings.len(), 1);
}

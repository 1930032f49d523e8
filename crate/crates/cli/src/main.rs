mod settings;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use ragresearch::clients::{HashTokenEmbedder, HttpTokenEmbedder, TokenEmbedder};
use ragresearch::jsonl::{load_documents, load_questions};
use ragresearch::pipeline::{compare_generators, conduct_research, emit_stats, run_batch};
use ragresearch::retrieval::{
    build_index, persist, segment_corpus, RetrievalService, WhitespaceTokenizer,
};
use ragresearch::AnswerRecord;

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "ragresearch",
    version,
    about = "Research-then-respond question answering over a MaxSim index"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a JSONL corpus into passages, embed them and write an index directory.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 450)]
        passage_tokens: usize,
        /// Uses `clients.token_embedder` from this file instead of the hash embedder.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Hash embedder dimension.
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Answer every question in a JSONL file.
    Run {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u16).range(1..))]
        workers: u16,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-question stats JSONL.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Offline mock models instead of the configured endpoints.
        #[arg(long)]
        mock: bool,
    },
    /// Send the same answer prompt to two generators and print both answers.
    Compare {
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        client_a: String,
        #[arg(long)]
        client_b: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mock models for the research stage.
        #[arg(long)]
        mock: bool,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildIndex {
            corpus,
            out,
            passage_tokens,
            config,
            dim,
            seed,
        } => build(&corpus, &out, passage_tokens, config.as_deref(), dim, seed).map(|_| true),
        Command::Run {
            questions,
            index,
            out,
            workers,
            config,
            stats,
            mock,
        } => run(
            &questions,
            &index,
            &out,
            workers.into(),
            config.as_deref(),
            stats.as_deref(),
            mock,
        ),
        Command::Compare {
            questions,
            index,
            client_a,
            client_b,
            config,
            out,
            mock,
        } => compare(
            &questions,
            &index,
            &client_a,
            &client_b,
            config.as_deref(),
            out.as_deref(),
            mock,
        ),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn build(
    corpus: &Path,
    out: &Path,
    passage_tokens: usize,
    config: Option<&Path>,
    dim: usize,
    seed: u64,
) -> Result<()> {
    let docs = load_documents(corpus)?;
    let passages = segment_corpus(&docs, passage_tokens, &WhitespaceTokenizer)?;
    let embedder: Box<dyn TokenEmbedder> = match Settings::load(config)?.clients.token_embedder {
        Some(cfg) => Box::new(HttpTokenEmbedder::new(cfg)?),
        None => Box::new(HashTokenEmbedder::new(dim, seed)),
    };
    let (index, store) = build_index(passages, embedder.as_ref(), passage_tokens)?;
    persist::save(&index, &store, out)
        .with_context(|| format!("writing index to {}", out.display()))?;
    eprintln!(
        "indexed {} documents as {} passages ({}) into {}",
        docs.len(),
        index.len(),
        index.metadata().embedder,
        out.display()
    );
    Ok(())
}

fn open_service(index_dir: &Path, settings: &Settings) -> Result<RetrievalService> {
    let (index, store) = persist::load(index_dir)
        .with_context(|| format!("loading index {}", index_dir.display()))?;
    if index.metadata().passage_tokens != settings.pipeline.passage_tokens {
        tracing::warn!(
            index = index.metadata().passage_tokens,
            config = settings.pipeline.passage_tokens,
            "index passage size differs from config"
        );
    }
    let embedder = settings.token_embedder(&index.metadata().embedder)?;
    Ok(RetrievalService::spawn(
        Arc::new(index),
        Arc::new(store),
        embedder,
        settings.retrieval.max_batch,
    ))
}

fn run(
    questions: &Path,
    index_dir: &Path,
    out: &Path,
    workers: usize,
    config: Option<&Path>,
    stats: Option<&Path>,
    mock: bool,
) -> Result<bool> {
    let settings = Settings::load(config)?;
    let clients = settings.research_clients(mock)?;
    let service = open_service(index_dir, &settings)?;
    let report = run_batch(
        questions,
        out,
        &service,
        &clients,
        &settings.pipeline,
        workers,
    )?;
    if let Some(path) = stats {
        emit_stats(&report, path)?;
    }
    let s = report.summary();
    eprintln!(
        "{} questions: {} ok, {} fallback, {} error in {:.1}s ({} retrieval batches for {} queries)",
        s.questions,
        s.ok,
        s.fallback,
        s.error,
        s.elapsed_ms / 1e3,
        service.stats().batches(),
        service.stats().queries()
    );
    Ok(report.error_count() == 0)
}

#[derive(Serialize)]
struct Side {
    client: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareLine {
    id: String,
    question: String,
    doc_ids: Vec<String>,
    final_prompt: String,
    a: Side,
    b: Side,
}

fn side(
    client: &str,
    r: &std::result::Result<AnswerRecord, ragresearch::answer::AnswerError>,
) -> Side {
    Side {
        client: client.to_string(),
        answer: r.as_ref().ok().map(|r| r.answer.clone()),
        error: r.as_ref().err().map(|e| e.to_string()),
    }
}

fn compare(
    questions: &Path,
    index_dir: &Path,
    name_a: &str,
    name_b: &str,
    config: Option<&Path>,
    out: Option<&Path>,
    mock: bool,
) -> Result<bool> {
    let settings = Settings::load(config)?;
    let clients = settings.research_clients(mock)?;
    let (a, b) = (
        settings.named_generator(name_a)?,
        settings.named_generator(name_b)?,
    );
    let questions = load_questions(questions)?;
    let service = open_service(index_dir, &settings)?;

    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut ok = true;
    for q in &questions {
        let line = match conduct_research(q, &service, &clients, &settings.pipeline) {
            Ok(research) => {
                let (ra, rb) = compare_generators(
                    &research.context,
                    q,
                    a.as_ref(),
                    b.as_ref(),
                    &settings.pipeline,
                );
                ok &= ra.is_ok() && rb.is_ok();
                let record = ra.as_ref().or(rb.as_ref()).ok();
                CompareLine {
                    id: q.id.clone(),
                    question: q.text.clone(),
                    doc_ids: record.map(|r| r.doc_ids.clone()).unwrap_or_default(),
                    final_prompt: record.map(|r| r.final_prompt.clone()).unwrap_or_default(),
                    a: side(name_a, &ra),
                    b: side(name_b, &rb),
                }
            }
            Err(e) => {
                ok = false;
                let failed = |client: &str| Side {
                    client: client.to_string(),
                    answer: None,
                    error: Some(e.to_string()),
                };
                CompareLine {
                    id: q.id.clone(),
                    question: q.text.clone(),
                    doc_ids: vec![],
                    final_prompt: String::new(),
                    a: failed(name_a),
                    b: failed(name_b),
                }
            }
        };
        serde_json::to_writer(&mut sink, &line)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(ok)
}

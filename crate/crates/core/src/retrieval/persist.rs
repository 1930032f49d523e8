//! On-disk layout of an index directory:
//!
//! * `index.json`: header with dim, passage_tokens, embedder id, passage count
//!   and the passage table;
//! * `index.bin`: per passage, row count as `u32` LE then `rows * dim` `f32` LE;
//! * `content.jsonl`: one passage body per line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContentStore, Index, IndexMetadata, RetrievalError, TokenEmbeddingMatrix};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::types::{Passage, PassageKey};

pub const HEADER_FILE: &str = "index.json";
pub const BODY_FILE: &str = "index.bin";
pub const CONTENT_FILE: &str = "content.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dim: usize,
    passage_tokens: usize,
    embedder: String,
    passage_count: usize,
    passages: Vec<PassageKey>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RetrievalError + '_ {
    move |e| RetrievalError::Io(format!("{}: {e}", path.display()))
}

pub fn save_index(index: &Index, dir: &Path) -> Result<(), RetrievalError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let meta = index.metadata();
    let header = Header {
        dim: meta.dim,
        passage_tokens: meta.passage_tokens,
        embedder: meta.embedder.clone(),
        passage_count: index.len(),
        passages: index.passage_table().to_vec(),
    };
    let hp = dir.join(HEADER_FILE);
    let f = File::create(&hp).map_err(io(&hp))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &header)
        .map_err(|e| RetrievalError::Io(format!("{}: {e}", hp.display())))?;

    let bp = dir.join(BODY_FILE);
    let mut w = BufWriter::new(File::create(&bp).map_err(io(&bp))?);
    for m in index.embeddings() {
        let rows = u32::try_from(m.rows())
            .map_err(|_| RetrievalError::Corrupt("passage has more than u32::MAX tokens".into()))?;
        w.write_all(&rows.to_le_bytes()).map_err(io(&bp))?;
        for v in m.values() {
            w.write_all(&v.to_le_bytes()).map_err(io(&bp))?;
        }
    }
    w.flush().map_err(io(&bp))
}

pub fn load_index(dir: &Path) -> Result<Index, RetrievalError> {
    let hp = dir.join(HEADER_FILE);
    let f = File::open(&hp).map_err(io(&hp))?;
    let header: Header = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| RetrievalError::Corrupt(format!("{}: {e}", hp.display())))?;
    if header.passages.len() != header.passage_count {
        return Err(RetrievalError::Corrupt(format!(
            "header lists {} passages but passage_count is {}",
            header.passages.len(),
            header.passage_count
        )));
    }

    let bp = dir.join(BODY_FILE);
    let mut bytes = Vec::new();
    File::open(&bp)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io(&bp))?;
    let mut off = 0usize;
    let mut take = |n: usize| -> Result<&[u8], RetrievalError> {
        let chunk = bytes
            .get(off..off + n)
            .ok_or_else(|| RetrievalError::Corrupt(format!("{} is truncated", bp.display())))?;
        off += n;
        Ok(chunk)
    };

    let mut embeddings = Vec::with_capacity(header.passage_count);
    for key in &header.passages {
        let rows = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let values = take(rows * header.dim * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let m = TokenEmbeddingMatrix::from_raw(header.dim, values)
            .map_err(|e| RetrievalError::Corrupt(format!("passage {key}: {e}")))?;
        embeddings.push(m);
    }
    if off != bytes.len() {
        return Err(RetrievalError::Corrupt(format!(
            "{} has trailing bytes",
            bp.display()
        )));
    }

    let metadata = IndexMetadata {
        dim: header.dim,
        passage_tokens: header.passage_tokens,
        embedder: header.embedder,
    };
    Index::from_parts(metadata, header.passages, embeddings)
}

pub fn save_store(store: &ContentStore, dir: &Path) -> Result<(), RetrievalError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    write_jsonl(store.passages(), &dir.join(CONTENT_FILE))
        .map_err(|e| RetrievalError::Io(e.to_string()))
}

pub fn load_store(dir: &Path) -> Result<ContentStore, RetrievalError> {
    let rows: Vec<(usize, Passage)> =
        read_jsonl(&dir.join(CONTENT_FILE)).map_err(|e| RetrievalError::Corrupt(e.to_string()))?;
    ContentStore::from_passages(rows.into_iter().map(|(_, p)| p).collect())
}

/// Writes both halves of an index directory.
pub fn save(index: &Index, store: &ContentStore, dir: &Path) -> Result<(), RetrievalError> {
    save_index(index, dir)?;
    save_store(store, dir)
}

/// Loads both halves and checks that every indexed passage has content.
pub fn load(dir: &Path) -> Result<(Index, ContentStore), RetrievalError> {
    let index = load_index(dir)?;
    let store = load_store(dir)?;
    if !store.covers(&index) {
        return Err(RetrievalError::Corrupt(
            "content store does not match the passage table".into(),
        ));
    }
    Ok((index, store))
}

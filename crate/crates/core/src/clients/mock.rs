use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hasher;
use std::sync::Mutex;

use fnv::FnvHasher;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClientError, Generator, TextEmbedder, TokenEmbedder};
use crate::retrieval::{TokenEmbeddingMatrix, Tokenizer, WhitespaceTokenizer};
use crate::snippets::EmbeddingVector;

/// Returns the user message unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoGenerator;

impl Generator for EchoGenerator {
    fn name(&self) -> &str {
        "echo"
    }

    fn generate(&self, _system: &str, user: &str) -> Result<String, ClientError> {
        Ok(user.to_string())
    }
}

/// Replays a fixed queue of replies and records every prompt it receives.
#[derive(Debug, Default)]
pub struct ScriptedGenerator {
    replies: Mutex<VecDeque<Result<String, ClientError>>>,
    prompts: Mutex<Vec<(String, String)>>,
}

impl ScriptedGenerator {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_results(replies.into_iter().map(|r| Ok(r.into())))
    }

    pub fn from_results(replies: impl IntoIterator<Item = Result<String, ClientError>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            prompts: Mutex::default(),
        }
    }

    /// `(system, user)` pairs in call order.
    pub fn prompts(&self) -> Vec<(String, String)> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }
}

impl Generator for ScriptedGenerator {
    fn name(&self) -> &str {
        "scripted"
    }

    fn generate(&self, system: &str, user: &str) -> Result<String, ClientError> {
        self.prompts
            .lock()
            .expect("prompt log poisoned")
            .push((system.to_string(), user.to_string()));
        self.replies
            .lock()
            .expect("reply queue poisoned")
            .pop_front()
            .unwrap_or(Err(ClientError::ScriptExhausted))
    }
}

/// Always fails with the given error.
#[derive(Debug, Clone)]
pub struct FailingGenerator(pub ClientError);

impl Generator for FailingGenerator {
    fn name(&self) -> &str {
        "failing"
    }

    fn generate(&self, _system: &str, _user: &str) -> Result<String, ClientError> {
        Err(self.0.clone())
    }
}

type GenerateFn = dyn Fn(&str, &str) -> Result<String, ClientError> + Send + Sync;

/// Generator backed by a closure.
pub struct FnGenerator {
    name: String,
    f: Box<GenerateFn>,
}

impl FnGenerator {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&str, &str) -> Result<String, ClientError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Box::new(f),
        }
    }
}

impl Generator for FnGenerator {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, system: &str, user: &str) -> Result<String, ClientError> {
        (self.f)(system, user)
    }
}

fn between<'a>(haystack: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = haystack.find(open)? + open.len();
    let len = haystack[start..].find(close)?;
    Some(&haystack[start..start + len])
}

/// Offline stand-in for both language models.
///
/// Query-generation prompts get a JSON list of queries built from the task and
/// distinctive context words; answer prompts get a one-line answer quoting the
/// question; anything else is echoed.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockResearchGenerator;

impl MockResearchGenerator {
    fn queries(prompt: &str) -> Option<String> {
        let n: usize = between(prompt, "Write ", " google search queries")?
            .trim()
            .parse()
            .ok()?;
        let task = between(prompt, "following task: \"", "\"\n")?;
        let context = between(prompt, "Context: ", "\n\nUse this context").unwrap_or("");

        let task_words: HashSet<String> = task.split_whitespace().map(str::to_lowercase).collect();
        let mut seen = HashSet::new();
        let mut words = context
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.chars().count() >= 5)
            .map(str::to_lowercase)
            .filter(|w| !task_words.contains(w) && seen.insert(w.clone()));
        let queries: Vec<String> = (1..=n)
            .map(|i| match words.next() {
                Some(w) => format!("{task} {w}"),
                None => format!("{task} ({i})"),
            })
            .collect();
        serde_json::to_string(&queries).ok()
    }

    fn answer(prompt: &str) -> Option<String> {
        let question = between(
            prompt,
            "answer the following query or task: \"",
            "\" in one or two",
        )?;
        let context = between(prompt, "Information: \"", "\"\n---\n").unwrap_or("");
        Some(format!(
            "Drawing on {} words of context: {question}",
            context.split_whitespace().count()
        ))
    }
}

impl Generator for MockResearchGenerator {
    fn name(&self) -> &str {
        "mock"
    }

    fn generate(&self, _system: &str, user: &str) -> Result<String, ClientError> {
        Ok(Self::queries(user)
            .or_else(|| Self::answer(user))
            .unwrap_or_else(|| user.to_string()))
    }
}

/// Seeded random projection of a feature string to `dim` values in [-1, 1].
struct Projector {
    dim: usize,
    seed: u64,
    cache: HashMap<String, Vec<f64>>,
}

impl Projector {
    fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            cache: HashMap::new(),
        }
    }

    fn add(&mut self, feature: &str, weight: f64, acc: &mut [f64]) {
        let (dim, seed) = (self.dim, self.seed);
        let proj = self.cache.entry(feature.to_string()).or_insert_with(|| {
            let mut h = FnvHasher::default();
            h.write_u64(seed);
            h.write(feature.as_bytes());
            let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        });
        for (a, p) in acc.iter_mut().zip(proj.iter()) {
            *a += weight * p;
        }
    }
}

/// Character trigrams of `text` padded with a space on both sides.
fn trigrams(text: &str) -> impl Iterator<Item = String> + '_ {
    let chars: Vec<char> = std::iter::once(' ')
        .chain(text.chars())
        .chain(std::iter::once(' '))
        .collect();
    (0..chars.len().saturating_sub(2)).map(move |i| chars[i..i + 3].iter().collect())
}

/// Deterministic per-text embedder: character trigram counts pushed through a
/// seeded random projection. Texts sharing many trigrams score high.
#[derive(Debug, Clone, Copy)]
pub struct HashTextEmbedder {
    dim: usize,
    seed: u64,
}

impl HashTextEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "dim must be positive");
        Self { dim, seed }
    }

    fn embed_one(&self, text: &str, proj: &mut Projector) -> Result<EmbeddingVector, ClientError> {
        if text.is_empty() {
            return Err(ClientError::Precondition("cannot embed empty text".into()));
        }
        let mut acc = vec![0.0; self.dim];
        for g in trigrams(text) {
            proj.add(&g, 1.0, &mut acc);
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut acc {
            *x /= norm;
        }
        EmbeddingVector::new(acc).map_err(|e| ClientError::Other(e.to_string()))
    }
}

impl TextEmbedder for HashTextEmbedder {
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ClientError> {
        if texts.is_empty() {
            return Err(ClientError::Precondition("no texts to embed".into()));
        }
        let mut proj = Projector::new(self.dim, self.seed);
        texts.iter().map(|t| self.embed_one(t, &mut proj)).collect()
    }
}

const HASH_TOKEN_PREFIX: &str = "hash-token";

/// Deterministic per-token embedder: each lowercased token maps to a
/// normalized projection of its own identity plus its character trigrams.
pub struct HashTokenEmbedder<T: Tokenizer = WhitespaceTokenizer> {
    dim: usize,
    seed: u64,
    tokenizer: T,
}

impl HashTokenEmbedder<WhitespaceTokenizer> {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self::with_tokenizer(dim, seed, WhitespaceTokenizer)
    }

    /// Rebuilds the embedder described by an index's embedder id.
    pub fn from_id(id: &str) -> Option<Self> {
        let mut parts = id.split(':');
        if parts.next()? != HASH_TOKEN_PREFIX {
            return None;
        }
        let mut dim = None;
        let mut seed = None;
        for p in parts {
            match p.split_once('=')? {
                ("dim", v) => dim = v.parse().ok(),
                ("seed", v) => seed = v.parse().ok(),
                _ => return None,
            }
        }
        Some(Self::new(dim.filter(|&d| d > 0)?, seed?))
    }
}

impl<T: Tokenizer> HashTokenEmbedder<T> {
    pub fn with_tokenizer(dim: usize, seed: u64, tokenizer: T) -> Self {
        assert!(dim > 0, "dim must be positive");
        Self {
            dim,
            seed,
            tokenizer,
        }
    }
}

impl<T: Tokenizer> TokenEmbedder for HashTokenEmbedder<T> {
    fn id(&self) -> String {
        format!("{HASH_TOKEN_PREFIX}:dim={}:seed={}", self.dim, self.seed)
    }

    fn embed_tokens(&self, text: &str) -> Result<TokenEmbeddingMatrix, ClientError> {
        let tokens = self.tokenizer.tokenize(text);
        if tokens.is_empty() {
            return Err(ClientError::Precondition(
                "cannot embed text without tokens".into(),
            ));
        }
        let mut proj = Projector::new(self.dim, self.seed);
        let rows: Vec<Vec<f64>> = tokens
            .into_iter()
            .map(|r| {
                let tok = text[r].to_lowercase();
                let mut acc = vec![0.0; self.dim];
                proj.add(&format!("tok:{tok}"), 2.0, &mut acc);
                for g in trigrams(&tok) {
                    proj.add(&g, 1.0, &mut acc);
                }
                acc
            })
            .collect();
        TokenEmbeddingMatrix::from_rows_normalized(&rows)
            .map_err(|e| ClientError::Other(e.to_string()))
    }
}

/// Looks texts up in a fixed table; unknown texts fail.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTextEmbedder {
    table: HashMap<String, Vec<f64>>,
}

impl ScriptedTextEmbedder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, text: impl Into<String>, vector: Vec<f64>) -> Self {
        self.table.insert(text.into(), vector);
        self
    }
}

impl TextEmbedder for ScriptedTextEmbedder {
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ClientError> {
        if texts.is_empty() {
            return Err(ClientError::Precondition("no texts to embed".into()));
        }
        texts
            .iter()
            .map(|t| {
                let v = self.table.get(*t).ok_or_else(|| {
                    ClientError::Other(format!("no scripted embedding for {t:?}"))
                })?;
                EmbeddingVector::new(v.clone()).map_err(|e| ClientError::Other(e.to_string()))
            })
            .collect()
    }
}

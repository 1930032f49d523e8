//! Config file layout and client construction.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use ragresearch::clients::{
    ChatCompletionsClient, EchoGenerator, EmbeddingClientConfig, GenerationClientConfig, Generator,
    HashTextEmbedder, HashTokenEmbedder, HttpTextEmbedder, HttpTokenEmbedder,
    MockResearchGenerator, TextEmbedder, TokenEmbedder,
};
use ragresearch::pipeline::Clients;
use ragresearch::PipelineConfig;

pub const QUERYGEN_ENDPOINT_ENV: &str = "RAGRESEARCH_QUERYGEN_ENDPOINT";
pub const ANSWER_ENDPOINT_ENV: &str = "RAGRESEARCH_ANSWER_ENDPOINT";
pub const TEXT_EMBED_ENDPOINT_ENV: &str = "RAGRESEARCH_TEXT_EMBED_ENDPOINT";
pub const TOKEN_EMBED_ENDPOINT_ENV: &str = "RAGRESEARCH_TOKEN_EMBED_ENDPOINT";

pub const MOCK_TEXT_DIM: usize = 64;
pub const MOCK_SEED: u64 = 0;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub retrieval: RetrievalSettings,
    pub clients: ClientSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    /// Upper bound on queries merged into one batched search.
    pub max_batch: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self { max_batch: 64 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientSettings {
    pub querygen: Option<GenerationClientConfig>,
    pub answer: Option<GenerationClientConfig>,
    pub text_embedder: Option<EmbeddingClientConfig>,
    pub token_embedder: Option<EmbeddingClientConfig>,
    /// Extra generators addressable by name from `compare`.
    pub generators: BTreeMap<String, GenerationClientConfig>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut s = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<Settings>(&raw)
                    .with_context(|| format!("parsing {}", p.display()))?
            }
            None => Settings::default(),
        };
        s.apply_env();
        s.pipeline.validate()?;
        Ok(s)
    }

    /// Endpoint env vars override whatever the file says.
    fn apply_env(&mut self) {
        let env = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        if let (Some(c), Some(url)) = (self.clients.querygen.as_mut(), env(QUERYGEN_ENDPOINT_ENV)) {
            c.endpoint = url;
        }
        if let (Some(c), Some(url)) = (self.clients.answer.as_mut(), env(ANSWER_ENDPOINT_ENV)) {
            c.endpoint = url;
        }
        if let (Some(c), Some(url)) = (
            self.clients.text_embedder.as_mut(),
            env(TEXT_EMBED_ENDPOINT_ENV),
        ) {
            c.endpoint = url;
        }
        if let (Some(c), Some(url)) = (
            self.clients.token_embedder.as_mut(),
            env(TOKEN_EMBED_ENDPOINT_ENV),
        ) {
            c.endpoint = url;
        }
    }

    pub fn research_clients(&self, mock: bool) -> Result<Clients> {
        if mock {
            return Ok(mock_clients());
        }
        let c = &self.clients;
        let missing = |name: &str| {
            anyhow!("config has no clients.{name} section (use --mock for offline runs)")
        };
        let querygen = c.querygen.clone().ok_or_else(|| missing("querygen"))?;
        let answer = c.answer.clone().ok_or_else(|| missing("answer"))?;
        let text = c
            .text_embedder
            .clone()
            .ok_or_else(|| missing("text_embedder"))?;
        Ok(Clients {
            querygen: Arc::new(ChatCompletionsClient::new(querygen)?),
            answer: Arc::new(ChatCompletionsClient::new(answer)?),
            text_embedder: Arc::new(HttpTextEmbedder::new(text)?) as Arc<dyn TextEmbedder>,
        })
    }

    /// Token embedder for an index built by `id`.
    pub fn token_embedder(&self, id: &str) -> Result<Arc<dyn TokenEmbedder>> {
        if let Some(h) = HashTokenEmbedder::from_id(id) {
            return Ok(Arc::new(h));
        }
        let Some(cfg) = self.clients.token_embedder.clone() else {
            bail!("index was built with {id:?}; config needs a clients.token_embedder section");
        };
        let emb = HttpTokenEmbedder::new(cfg)?;
        if emb.id() != id {
            bail!(
                "index was built with {id:?} but the configured token embedder is {:?}",
                emb.id()
            );
        }
        Ok(Arc::new(emb))
    }

    /// `echo` and `mock` are built in; other names refer to config sections.
    pub fn named_generator(&self, name: &str) -> Result<Arc<dyn Generator>> {
        let c = &self.clients;
        let cfg = match name {
            "echo" => return Ok(Arc::new(EchoGenerator)),
            "mock" => return Ok(Arc::new(MockResearchGenerator)),
            "querygen" => c.querygen.clone(),
            "answer" => c.answer.clone(),
            other => c.generators.get(other).cloned(),
        };
        let cfg = cfg.ok_or_else(|| anyhow!("unknown client {name:?}"))?;
        Ok(Arc::new(ChatCompletionsClient::new(cfg)?))
    }
}

pub fn mock_clients() -> Clients {
    Clients {
        querygen: Arc::new(MockResearchGenerator),
        answer: Arc::new(MockResearchGenerator),
        text_embedder: Arc::new(HashTextEmbedder::new(MOCK_TEXT_DIM, MOCK_SEED)),
    }
}

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::{compose_input, DEFAULT_INPUT_TEMPLATE, PVQRR_INSTRUCTION};
use super::{EmbeddingSet, Provenance};
use crate::corpus::QuestionnaireSpec;
use crate::{Error, Result};

/// Settings for an embeddings endpoint speaking the common
/// `{"model", "input": [..]} -> {"data": [{"embedding": [..]}]}` protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Requests go to `{base_url}/embeddings`.
    pub base_url: String,
    pub model: String,
    pub prompt: String,
    /// Models without instruction support get the bare item text.
    pub use_prompt: bool,
    /// `{prompt}` and `{text}` are substituted when `use_prompt` is set.
    pub input_template: String,
    /// Environment variable holding a bearer token; unset means no auth header.
    pub api_key_env: String,
    pub batch_size: usize,
    pub timeout_secs: f64,
    pub retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub cache_dir: PathBuf,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8080/v1".into(),
            model: String::new(),
            prompt: PVQRR_INSTRUCTION.into(),
            use_prompt: true,
            input_template: DEFAULT_INPUT_TEMPLATE.into(),
            api_key_env: "EMBEDDING_API_KEY".into(),
            batch_size: 32,
            timeout_secs: 60.0,
            retries: 3,
            backoff_ms: 500,
            cache_dir: PathBuf::from(".squid-cache"),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::Invalid("timeout_secs must be positive".into()));
        }
        if self.model.is_empty() {
            return Err(Error::Invalid("endpoint model name is empty".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        let cfg: EndpointConfig = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        if cfg.cache_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.cache_dir = parent.join(&cfg.cache_dir);
            }
        }
        Ok(cfg)
    }

    fn effective_prompt(&self) -> Option<&str> {
        self.use_prompt.then_some(self.prompt.as_str())
    }

    fn url(&self) -> String {
        format!("{}/embeddings", self.base_url.trim_end_matches('/'))
    }
}

/// Content-addressed store of embedding vectors.
///
/// Entries are written to a temporary file and renamed into place, so a
/// reader sees either nothing or a complete entry.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    embedding: Vec<f64>,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EmbeddingCache { dir: dir.into() }
    }

    /// SHA-256 over model, prompt and text, NUL-separated.
    pub fn key(model: &str, prompt: Option<&str>, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0u8]);
        h.update(prompt.unwrap_or("").as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Vec<f64>> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        Some(entry.embedding)
    }

    pub fn put(&self, key: &str, model: &str, embedding: &[f64]) -> Result<()> {
        let path = self.path(key);
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let body = serde_json::to_vec(&CacheEntry {
            model: model.to_string(),
            embedding: embedding.to_vec(),
        })
        .expect("entry serializes");
        let tmp = dir.join(format!(".{key}.{}.{:?}.tmp", std::process::id(), thread::current().id()));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&body).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
    #[serde(default)]
    index: Option<usize>,
}

struct Client {
    agent: ureq::Agent,
    url: String,
    token: Option<String>,
}

impl Client {
    fn new(config: &EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let token = std::env::var(&config.api_key_env)
            .ok()
            .filter(|t| !t.is_empty());
        Client {
            agent,
            url: config.url(),
            token,
        }
    }

    fn post_once(&self, model: &str, inputs: &[String]) -> std::result::Result<Vec<Vec<f64>>, String> {
        let mut req = self.agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req
            .send_json(&EmbeddingRequest { model, input: inputs })
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status} from {}", self.url));
        }
        let parsed: EmbeddingResponse = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_json()
            .map_err(|e| format!("malformed response: {e}"))?;
        let mut data = parsed.data;
        if data.iter().all(|d| d.index.is_some()) {
            data.sort_by_key(|d| d.index);
        }
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }

    fn post(&self, config: &EndpointConfig, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut attempt = 0;
        loop {
            match self.post_once(&config.model, inputs) {
                Ok(v) => return Ok(v),
                Err(msg) if attempt >= config.retries => {
                    return Err(Error::Http(format!("{msg} (after {} attempt(s))", attempt + 1)))
                }
                Err(_) => {
                    let delay = config.backoff_ms.saturating_mul(1u64 << attempt.min(16));
                    thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
            }
        }
    }
}

/// Embeds every item of `spec` in the given text variant.
///
/// Vectors already in the cache are not requested again; a fully cached
/// questionnaire performs no network calls at all.
pub fn fetch_embeddings(
    config: &EndpointConfig,
    spec: &QuestionnaireSpec,
    variant: &str,
) -> Result<EmbeddingSet> {
    config.validate()?;
    let prompt = config.effective_prompt();
    let inputs = spec
        .items
        .iter()
        .map(|item| {
            let text = item.texts.get(variant).ok_or_else(|| {
                Error::Invalid(format!("item {:?} has no {variant:?} text", item.id))
            })?;
            Ok(compose_input(&config.input_template, prompt, text))
        })
        .collect::<Result<Vec<_>>>()?;

    let cache = EmbeddingCache::new(&config.cache_dir);
    let keys: Vec<String> = inputs
        .iter()
        .map(|t| EmbeddingCache::key(&config.model, prompt, t))
        .collect();
    let mut vectors: Vec<Option<Vec<f64>>> = keys.iter().map(|k| cache.get(k)).collect();
    let missing: Vec<usize> = (0..inputs.len()).filter(|&i| vectors[i].is_none()).collect();

    if !missing.is_empty() {
        let client = Client::new(config);
        for chunk in missing.chunks(config.batch_size) {
            let batch: Vec<String> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let got = client.post(config, &batch)?;
            if got.len() != batch.len() {
                return Err(Error::Http(format!(
                    "response count mismatch: sent {} inputs, received {} vectors",
                    batch.len(),
                    got.len()
                )));
            }
            for (&i, v) in chunk.iter().zip(got) {
                cache.put(&keys[i], &config.model, &v)?;
                vectors[i] = Some(v);
            }
        }
    }

    let rows: Vec<Vec<f64>> = vectors.into_iter().map(|v| v.expect("filled above")).collect();
    let d = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Invalid(format!(
            "vector length mismatch: item {:?} has {} values, expected {d}",
            spec.items[i].id,
            r.len()
        )));
    }
    Ok(EmbeddingSet::new(spec.item_ids(), rows)?.with_provenance(Provenance {
        source: format!("{} ({variant})", config.url()),
        model: Some(config.model.clone()),
        prompt_used: prompt.is_some(),
        squid_treated: false,
    }))
}

//! Sentence- and token-level query embeddings from a precomputed JSON Lines
//! file or a remote embedding service.
//!
//! Precomputed lines look like
//! `{"text": "...", "granularity": "sentence"|"token", "dim": 3, "embedding": [...]}`
//! where token granularity nests one row per token. The remote service takes
//! `{"model", "granularity", "texts"}` and answers `{"dim", "embeddings"}`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::http::{HttpError, JsonClient, RetryPolicy};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("embedding dimension drift: expected {expected}, got {got}")]
    DimensionDrift { expected: usize, got: usize },
    #[error("count mismatch: requested {requested} embeddings, received {received}")]
    CountMismatch { requested: usize, received: usize },
    #[error("malformed embedding response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("embedding cache {path}: {source}")]
    Cache {
        path: String,
        source: std::io::Error,
    },
    #[error("remote endpoint must be an absolute http(s) URL, got `{0}`")]
    RelativeEndpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Sentence,
    Token,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Sentence => "sentence",
            Granularity::Token => "token",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
    pub model_id: String,
}

impl EmbeddingMatrix {
    /// The sentence vector (first row).
    pub fn vector(&self) -> &[f64] {
        self.rows.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// One entry per text, in order; `None` marks a text the provider has no
    /// embedding for. Either every text gets an entry or the call fails.
    fn fetch(
        &self,
        texts: &[String],
        granularity: Granularity,
    ) -> Result<Vec<Option<EmbeddingMatrix>>, EmbeddingError>;
}

fn normalize(text: &str) -> String {
    text.nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Precomputed,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// File path for precomputed embeddings, URL for a remote service.
    pub location: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

pub fn open_provider(
    config: &ProviderConfig,
    base_dir: &Path,
) -> Result<Box<dyn EmbeddingProvider>, EmbeddingError> {
    match config.kind {
        ProviderKind::Precomputed => {
            let path = base_dir.join(&config.location);
            Ok(Box::new(PrecomputedProvider::load(
                &path,
                &config.model_id,
            )?))
        }
        ProviderKind::Remote => {
            let cache = config.cache_dir.as_ref().map(|d| base_dir.join(d));
            Ok(Box::new(RemoteProvider::new(
                &config.location,
                &config.model_id,
                cache,
                Duration::from_millis(config.timeout_ms),
                RetryPolicy::default(),
            )?))
        }
    }
}

#[derive(Debug)]
pub struct PrecomputedProvider {
    model_id: String,
    dim: Option<usize>,
    entries: HashMap<(Granularity, String), Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecomputedLine {
    text: String,
    granularity: Granularity,
    dim: usize,
    embedding: Value,
}

impl PrecomputedProvider {
    pub fn load(path: &Path, model_id: &str) -> Result<Self, EmbeddingError> {
        let raw = fs::read_to_string(path).map_err(|source| EmbeddingError::Cache {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&raw, &path.display().to_string(), model_id)
    }

    pub fn parse(raw: &str, source: &str, model_id: &str) -> Result<Self, EmbeddingError> {
        let mut provider = PrecomputedProvider {
            model_id: model_id.to_owned(),
            dim: None,
            entries: HashMap::new(),
        };
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| EmbeddingError::Malformed {
                path: source.to_owned(),
                line: i + 1,
                message,
            };
            let entry: PrecomputedLine =
                serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
            let rows = parse_rows(&entry.embedding, entry.granularity).map_err(malformed)?;
            check_rows(&rows, entry.dim).map_err(malformed)?;
            match provider.dim {
                None => provider.dim = Some(entry.dim),
                Some(d) if d != entry.dim => {
                    return Err(EmbeddingError::DimensionDrift {
                        expected: d,
                        got: entry.dim,
                    })
                }
                Some(_) => {}
            }
            provider
                .entries
                .insert((entry.granularity, normalize(&entry.text)), rows);
        }
        Ok(provider)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn fetch(
        &self,
        texts: &[String],
        granularity: Granularity,
    ) -> Result<Vec<Option<EmbeddingMatrix>>, EmbeddingError> {
        Ok(texts
            .iter()
            .map(|t| {
                self.entries
                    .get(&(granularity, normalize(t)))
                    .map(|rows| EmbeddingMatrix {
                        rows: rows.clone(),
                        dim: self.dim.unwrap_or(0),
                        model_id: self.model_id.clone(),
                    })
            })
            .collect())
    }
}

fn parse_rows(value: &Value, granularity: Granularity) -> Result<Vec<Vec<f64>>, String> {
    let vector = |v: &Value| -> Result<Vec<f64>, String> {
        v.as_array()
            .ok_or("expected an array of numbers")?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| format!("non-numeric component {x}"))
            })
            .collect()
    };
    match granularity {
        Granularity::Sentence => Ok(vec![vector(value)?]),
        Granularity::Token => value
            .as_array()
            .ok_or_else(|| "expected an array of token rows".to_owned())?
            .iter()
            .map(vector)
            .collect(),
    }
}

fn check_rows(rows: &[Vec<f64>], dim: usize) -> Result<(), String> {
    if dim == 0 {
        return Err("dim must be positive".into());
    }
    match rows.iter().find(|r| r.len() != dim) {
        Some(r) => Err(format!(
            "row of length {} does not match dim {dim}",
            r.len()
        )),
        None => Ok(()),
    }
}

/// Cache key: SHA-256 over model id, granularity and the NFC-normalized text.
pub fn cache_key(model_id: &str, granularity: Granularity, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0]);
    h.update(granularity.as_str().as_bytes());
    h.update([0]);
    h.update(normalize(text).as_bytes());
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug)]
pub struct RemoteProvider {
    endpoint: String,
    model_id: String,
    client: JsonClient,
    cache_dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<Vec<f64>>>>,
    dim: Mutex<Option<usize>>,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    granularity: Granularity,
    texts: &'a [String],
}

impl RemoteProvider {
    pub fn new(
        endpoint: &str,
        model_id: &str,
        cache_dir: Option<PathBuf>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, EmbeddingError> {
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(EmbeddingError::RelativeEndpoint(endpoint.to_owned()));
        }
        if let Some(dir) = &cache_dir {
            fs::create_dir_all(dir).map_err(|source| EmbeddingError::Cache {
                path: dir.display().to_string(),
                source,
            })?;
        }
        Ok(RemoteProvider {
            endpoint: endpoint.to_owned(),
            model_id: model_id.to_owned(),
            client: JsonClient::new(timeout, retry),
            cache_dir,
            memory: Mutex::new(HashMap::new()),
            dim: Mutex::new(None),
        })
    }

    fn observe_dim(&self, dim: usize) -> Result<(), EmbeddingError> {
        let mut seen = self.dim.lock().expect("dim lock");
        match *seen {
            None => *seen = Some(dim),
            Some(d) if d != dim => {
                return Err(EmbeddingError::DimensionDrift {
                    expected: d,
                    got: dim,
                })
            }
            Some(_) => {}
        }
        Ok(())
    }

    fn cached(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>, EmbeddingError> {
        if let Some(rows) = self.memory.lock().expect("cache lock").get(key) {
            return Ok(Some(rows.clone()));
        }
        let Some(dir) = &self.cache_dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{key}.json"));
        match fs::read(&path) {
            Ok(bytes) => {
                let entry: CacheEntry =
                    serde_json::from_slice(&bytes).map_err(|e| EmbeddingError::Cache {
                        path: path.display().to_string(),
                        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                    })?;
                self.observe_dim(entry.dim)?;
                self.memory
                    .lock()
                    .expect("cache lock")
                    .insert(key.to_owned(), entry.rows.clone());
                Ok(Some(entry.rows))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(EmbeddingError::Cache {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    fn store(&self, key: &str, dim: usize, rows: &[Vec<f64>]) -> Result<(), EmbeddingError> {
        self.memory
            .lock()
            .expect("cache lock")
            .insert(key.to_owned(), rows.to_vec());
        let Some(dir) = &self.cache_dir else {
            return Ok(());
        };
        let path = dir.join(format!("{key}.json"));
        let io_err = |source| EmbeddingError::Cache {
            path: path.display().to_string(),
            source,
        };
        // write-then-rename so readers never see a partial entry
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
        let body = serde_json::to_vec(&CacheEntry {
            dim,
            rows: rows.to_vec(),
        })
        .expect("cache entry serializes");
        tmp.write_all(&body).map_err(io_err)?;
        tmp.persist(&path).map_err(|e| io_err(e.error))?;
        Ok(())
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn fetch(
        &self,
        texts: &[String],
        granularity: Granularity,
    ) -> Result<Vec<Option<EmbeddingMatrix>>, EmbeddingError> {
        let keys: Vec<String> = texts
            .iter()
            .map(|t| cache_key(&self.model_id, granularity, t))
            .collect();
        let mut results: Vec<Option<Vec<Vec<f64>>>> = Vec::with_capacity(texts.len());
        for key in &keys {
            results.push(self.cached(key)?);
        }

        // one batched request for everything not cached, deduplicated
        let mut missing: Vec<usize> = Vec::new();
        let mut batch: Vec<String> = Vec::new();
        let mut batch_pos: HashMap<&str, usize> = HashMap::new();
        for (i, r) in results.iter().enumerate() {
            if r.is_none() {
                missing.push(i);
                if !batch_pos.contains_key(keys[i].as_str()) {
                    batch_pos.insert(&keys[i], batch.len());
                    batch.push(normalize(&texts[i]));
                }
            }
        }
        let mut fetched: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut fetched_dim = 0;
        if !batch.is_empty() {
            let response = self.client.post(
                &self.endpoint,
                &EmbedRequest {
                    model: &self.model_id,
                    granularity,
                    texts: &batch,
                },
            )?;
            let dim = response
                .get("dim")
                .and_then(Value::as_u64)
                .ok_or_else(|| EmbeddingError::BadResponse("missing `dim`".into()))?
                as usize;
            let embeddings = response
                .get("embeddings")
                .and_then(Value::as_array)
                .ok_or_else(|| EmbeddingError::BadResponse("missing `embeddings`".into()))?;
            if embeddings.len() != batch.len() {
                return Err(EmbeddingError::CountMismatch {
                    requested: batch.len(),
                    received: embeddings.len(),
                });
            }
            for e in embeddings {
                let rows = parse_rows(e, granularity).map_err(EmbeddingError::BadResponse)?;
                check_rows(&rows, dim).map_err(EmbeddingError::BadResponse)?;
                fetched.push(rows);
            }
            self.observe_dim(dim)?;
            fetched_dim = dim;
            for (key, &pos) in &batch_pos {
                self.store(key, dim, &fetched[pos])?;
            }
        }
        for i in missing {
            results[i] = Some(fetched[batch_pos[keys[i].as_str()]].clone());
        }

        let dim = self.dim.lock().expect("dim lock").unwrap_or(fetched_dim);
        Ok(results
            .into_iter()
            .map(|rows| {
                rows.map(|rows| EmbeddingMatrix {
                    rows,
                    dim,
                    model_id: self.model_id.clone(),
                })
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_misses_everything() {
        let p = PrecomputedProvider::parse("", "mem", "m").unwrap();
        assert!(p.is_empty());
        let out = p.fetch(&["abc".into()], Granularity::Sentence).unwrap();
        assert_eq!(out, vec![None]);
    }

    #[test]
    fn lookup_returns_stored_vector() {
        let raw = r#"{"text": "abc", "granularity": "sentence", "dim": 3, "embedding": [1.0, 0.5, -2.0]}
{"text": "abc", "granularity": "token", "dim": 3, "embedding": [[1, 0, 0], [0, 1, 0]]}"#;
        let p = PrecomputedProvider::parse(raw, "mem", "m").unwrap();
        let out = p
            .fetch(&["abc".into(), "zzz".into()], Granularity::Sentence)
            .unwrap();
        assert_eq!(out[0].as_ref().unwrap().vector(), &[1.0, 0.5, -2.0]);
        assert_eq!(out[1], None);
        let tok = p.fetch(&["abc".into()], Granularity::Token).unwrap();
        assert_eq!(tok[0].as_ref().unwrap().rows.len(), 2);
    }

    #[test]
    fn inconsistent_dims_fail() {
        let raw = r#"{"text": "a", "granularity": "sentence", "dim": 3, "embedding": [1, 2, 3]}
{"text": "b", "granularity": "sentence", "dim": 4, "embedding": [1, 2, 3, 4]}"#;
        assert!(matches!(
            PrecomputedProvider::parse(raw, "mem", "m"),
            Err(EmbeddingError::DimensionDrift {
                expected: 3,
                got: 4
            })
        ));
        let raw = r#"{"text": "a", "granularity": "sentence", "dim": 3, "embedding": [1, 2]}"#;
        assert!(matches!(
            PrecomputedProvider::parse(raw, "mem", "m"),
            Err(EmbeddingError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn nfc_equal_texts_share_entries() {
        let raw = r#"{"text": "café", "granularity": "sentence", "dim": 1, "embedding": [1]}"#;
        let p = PrecomputedProvider::parse(raw, "mem", "m").unwrap();
        let out = p
            .fetch(&["cafe\u{301}".into()], Granularity::Sentence)
            .unwrap();
        assert!(out[0].is_some());
        assert_eq!(
            cache_key("m", Granularity::Token, "caf\u{e9}"),
            cache_key("m", Granularity::Token, "cafe\u{301}")
        );
        assert_ne!(
            cache_key("m", Granularity::Token, "x"),
            cache_key("m", Granularity::Sentence, "x")
        );
    }

    #[test]
    fn remote_endpoint_must_be_absolute() {
        assert!(matches!(
            RemoteProvider::new(
                "localhost/embed",
                "m",
                None,
                Duration::from_secs(1),
                RetryPolicy::default()
            ),
            Err(EmbeddingError::RelativeEndpoint(_))
        ));
    }
}

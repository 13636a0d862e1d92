use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::scoring::{post_json, BackendError, RemoteSettings};
use crate::{Error, Result};

pub const MOCK_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Component-wise mean. All vectors must share a dimension.
    pub fn mean<'a, I>(vectors: I) -> Result<EmbeddingVector>
    where
        I: IntoIterator<Item = &'a EmbeddingVector>,
    {
        let mut acc: Option<Vec<f64>> = None;
        let mut count = 0usize;
        for v in vectors {
            match &mut acc {
                None => acc = Some(v.0.clone()),
                Some(sum) => {
                    if sum.len() != v.dim() {
                        return Err(Error::Domain(format!(
                            "embedding dimension mismatch: {} vs {}",
                            sum.len(),
                            v.dim()
                        )));
                    }
                    sum.iter_mut().zip(&v.0).for_each(|(s, x)| *s += x);
                }
            }
            count += 1;
        }
        let sum = acc.ok_or_else(|| Error::Analysis("mean of no embeddings".into()))?;
        Ok(EmbeddingVector(sum.into_iter().map(|s| s / count as f64).collect()))
    }
}

/// Text embedding provider.
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;

    fn embed(&self, text: &str) -> Result<EmbeddingVector>;

    /// Number of provider calls made so far (cache hits excluded).
    fn calls(&self) -> usize;
}

/// Hashed bag of lowercase alphanumeric tokens: each token adds ±1 to one
/// of 64 buckets (bucket and sign from its SHA-256), then the vector is
/// unit-normalized. Text without tokens, or whose tokens cancel, is
/// degenerate.
#[derive(Debug, Default)]
pub struct MockEmbedder {
    calls: AtomicUsize,
}

impl Embedder for MockEmbedder {
    fn model_id(&self) -> &str {
        "mock-bag-of-tokens-64"
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut v = vec![0.0; MOCK_DIM];
        for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = Sha256::digest(token.to_lowercase().as_bytes());
            let bucket = (u64::from_be_bytes(h[..8].try_into().expect("8 bytes")) % MOCK_DIM as u64) as usize;
            v[bucket] += if h[8] & 1 == 0 { 1.0 } else { -1.0 };
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Analysis("text has no embeddable tokens".into()));
        }
        Ok(EmbeddingVector(v.into_iter().map(|x| x / norm).collect()))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// OpenAI-style `/embeddings` provider.
pub struct RemoteEmbedder {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: String,
    calls: AtomicUsize,
}

impl RemoteEmbedder {
    pub fn new(settings: &RemoteSettings, api_key: String) -> Result<Self> {
        Ok(RemoteEmbedder {
            client: crate::scoring::remote_client(Duration::from_secs(settings.timeout_secs))?,
            url: format!("{}/embeddings", settings.base_url.trim_end_matches('/')),
            model: settings.model.clone(),
            api_key,
            calls: AtomicUsize::new(0),
        })
    }

    fn request(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        let resp = post_json(
            &self.client,
            &self.url,
            &self.api_key,
            &json!({"model": self.model, "input": text}),
        )?;
        let values = resp
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::transient("response has no data[0].embedding"))?;
        values
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| BackendError::fatal("non-numeric embedding component"))
            })
            .collect::<Result<Vec<f64>, _>>()
            .map(EmbeddingVector)
    }
}

impl Embedder for RemoteEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let policy = crate::scoring::RetryPolicy::default();
        let mut attempt = 0;
        loop {
            match self.request(text) {
                Ok(v) => return Ok(v),
                Err(e) if e.retryable && attempt < policy.max_retries => {
                    std::thread::sleep(policy.delay(attempt, e.retry_after));
                    attempt += 1;
                }
                Err(e) => return Err(Error::Analysis(format!("embedding failed: {}", e.message))),
            }
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingEntry {
    key: String,
    model_id: String,
    vector: EmbeddingVector,
}

/// Caches another embedder's vectors by (model, text), optionally persisted
/// as JSON Lines.
pub struct CachedEmbedder {
    inner: Arc<dyn Embedder>,
    entries: RwLock<HashMap<String, EmbeddingVector>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl CachedEmbedder {
    pub fn in_memory(inner: Arc<dyn Embedder>) -> Self {
        CachedEmbedder {
            inner,
            entries: RwLock::new(HashMap::new()),
            writer: None,
            path: None,
        }
    }

    pub fn open(inner: Arc<dyn Embedder>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::file(path, e))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::file(path, e))?;
                match serde_json::from_str::<EmbeddingEntry>(&line) {
                    Ok(e) => {
                        entries.insert(e.key, e.vector);
                    }
                    Err(e) if !line.trim().is_empty() => warn!("{}: skipping bad cache line: {e}", path.display()),
                    Err(_) => {}
                }
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::file(path, e))?;
        Ok(CachedEmbedder {
            inner,
            entries: RwLock::new(entries),
            writer: Some(Mutex::new(BufWriter::new(file))),
            path: Some(path.to_path_buf()),
        })
    }

    fn key(&self, text: &str) -> String {
        let digest = Sha256::new()
            .chain_update(self.inner.model_id().as_bytes())
            .chain_update([0u8])
            .chain_update(text.as_bytes())
            .finalize();
        hex::encode(digest)
    }
}

impl Embedder for CachedEmbedder {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let key = self.key(text);
        if let Some(v) = self.entries.read().expect("embedding cache").get(&key) {
            return Ok(v.clone());
        }
        let vector = self.inner.embed(text)?;
        let mut entries = self.entries.write().expect("embedding cache");
        if let Some(v) = entries.get(&key) {
            return Ok(v.clone());
        }
        if let Some(writer) = &self.writer {
            let entry = EmbeddingEntry {
                key: key.clone(),
                model_id: self.inner.model_id().to_string(),
                vector: vector.clone(),
            };
            let line = serde_json::to_string(&entry).expect("embedding entry serializes");
            let mut w = writer.lock().expect("embedding writer");
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|e| Error::file(self.path.clone().unwrap_or_default(), e))?;
        }
        entries.insert(key, vector.clone());
        Ok(vector)
    }

    fn calls(&self) -> usize {
        self.inner.calls()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_unit_and_deterministic() {
        let m = MockEmbedder::default();
        let a = m.embed("Bike lanes make cities better").unwrap();
        assert_eq!(a.dim(), MOCK_DIM);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, m.embed("bike LANES make cities better!").unwrap());
        assert!(m.embed("  ... ").is_err());
        assert_eq!(m.calls(), 3);
    }

    #[test]
    fn mean_of_vectors() {
        let a = EmbeddingVector(vec![1.0, 0.0]);
        let b = EmbeddingVector(vec![0.0, 1.0]);
        assert_eq!(
            EmbeddingVector::mean([&a, &b]).unwrap(),
            EmbeddingVector(vec![0.5, 0.5])
        );
        assert!(EmbeddingVector::mean(std::iter::empty()).is_err());
        assert!(EmbeddingVector::mean([&a, &EmbeddingVector(vec![1.0])]).is_err());
    }

    #[test]
    fn cache_avoids_repeat_calls_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let inner = Arc::new(MockEmbedder::default());
        let cached = CachedEmbedder::open(inner.clone(), &path).unwrap();
        let v = cached.embed("hello world").unwrap();
        assert_eq!(cached.embed("hello world").unwrap(), v);
        assert_eq!(inner.calls(), 1);
        drop(cached);

        let inner2 = Arc::new(MockEmbedder::default());
        let reopened = CachedEmbedder::open(inner2.clone(), &path).unwrap();
        assert_eq!(reopened.embed("hello world").unwrap(), v);
        assert_eq!(inner2.calls(), 0);
    }
}

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, Prompt, ScoreRequest, ScoringBackend};
use crate::{Error, Result};

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "GRAVWELL_API_KEY";

pub fn api_key_from_env() -> Result<String> {
    match std::env::var(API_KEY_ENV) {
        Ok(k) if !k.trim().is_empty() => Ok(k),
        _ => Err(Error::Config(format!(
            "remote backend selected but {API_KEY_ENV} is not set"
        ))),
    }
}

/// Endpoint settings shared by the remote scorer and embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSettings {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

pub(crate) fn build_client(timeout: Duration) -> Result<Client> {
    Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| Error::Config(format!("http client: {e}")))
}

fn retry_after(headers: &reqwest::header::HeaderMap) -> Option<Duration> {
    let v = headers.get(reqwest::header::RETRY_AFTER)?.to_str().ok()?;
    let secs: f64 = v.trim().parse().ok()?;
    (secs.is_finite() && secs >= 0.0).then(|| Duration::from_secs_f64(secs))
}

/// POSTs `body` as JSON with bearer auth. 429, 5xx and transport failures
/// are retryable; other non-success statuses are not.
pub(crate) fn post_json(client: &Client, url: &str, api_key: &str, body: &Value) -> Result<Value, BackendError> {
    let resp = client
        .post(url)
        .bearer_auth(api_key)
        .json(body)
        .send()
        .map_err(|e| BackendError::transient(format!("request to {url} failed: {e}")))?;
    let status = resp.status();
    if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
        let hint = retry_after(resp.headers());
        return Err(BackendError {
            message: format!("{url} returned {status}"),
            retryable: true,
            retry_after: hint,
        });
    }
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(BackendError::fatal(format!("{url} returned {status}: {text}")));
    }
    resp.json::<Value>()
        .map_err(|e| BackendError::transient(format!("bad JSON from {url}: {e}")))
}

/// OpenAI-style `/chat/completions` backend.
pub struct RemoteChatBackend {
    client: Client,
    url: String,
    model: String,
    api_key: String,
    temperature: Option<f64>,
    calls: AtomicUsize,
}

impl RemoteChatBackend {
    pub fn new(settings: &RemoteSettings, api_key: String, temperature: Option<f64>) -> Result<Self> {
        Ok(RemoteChatBackend {
            client: build_client(Duration::from_secs(settings.timeout_secs))?,
            url: format!("{}/chat/completions", settings.base_url.trim_end_matches('/')),
            model: settings.model.clone(),
            api_key,
            temperature,
            calls: AtomicUsize::new(0),
        })
    }
}

impl ScoringBackend for RemoteChatBackend {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&self, _request: &ScoreRequest<'_>, prompt: &Prompt) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        let resp = post_json(&self.client, &self.url, &self.api_key, &body)?;
        resp.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::transient("response has no choices[0].message.content"))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

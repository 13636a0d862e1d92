//! Five-level support and alignment scores from a pluggable backend, behind
//! a content-keyed cache.

mod cache;
mod level;
mod mock;
mod parse;
mod prompt;
mod remote;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::CommentContext;
use crate::{Error, Result};

pub use cache::{CacheEntry, ScoreCache};
pub use level::ScoreLevel;
pub use mock::{mock_score, MockScorer};
pub use parse::parse_model_output;
pub use prompt::{
    build_alignment_prompt, build_support_prompt, Prompt, ALIGNMENT_SYSTEM_PROMPT, SUPPORT_SYSTEM_PROMPT,
};
pub use remote::{api_key_from_env, RemoteChatBackend, RemoteSettings, API_KEY_ENV};
pub(crate) use remote::{build_client as remote_client, post_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Support,
    Alignment,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Support => "support",
            ScoreKind::Alignment => "alignment",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One support judgement (a single context) or one alignment judgement
/// (an ordered pair of contexts).
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    kind: ScoreKind,
    primary: &'a CommentContext,
    secondary: Option<&'a CommentContext>,
}

impl<'a> ScoreRequest<'a> {
    pub fn support(ctx: &'a CommentContext) -> Self {
        ScoreRequest {
            kind: ScoreKind::Support,
            primary: ctx,
            secondary: None,
        }
    }

    pub fn alignment(first: &'a CommentContext, second: &'a CommentContext) -> Self {
        ScoreRequest {
            kind: ScoreKind::Alignment,
            primary: first,
            secondary: Some(second),
        }
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn primary(&self) -> &'a CommentContext {
        self.primary
    }

    pub fn secondary(&self) -> Option<&'a CommentContext> {
        self.secondary
    }

    pub fn prompt(&self) -> Prompt {
        match self.secondary {
            None => build_support_prompt(self.primary),
            Some(second) => build_alignment_prompt(self.primary, second),
        }
    }

    /// Kind tag plus user payload; everything that identifies the request.
    pub fn canonical_text(&self) -> String {
        prompt::canonical_text(self.kind, &self.prompt())
    }

    /// Hex SHA-256 of [`Self::canonical_text`].
    pub fn cache_key(&self) -> String {
        cache_key_for(&self.canonical_text())
    }
}

fn cache_key_for(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Failure reported by a backend for a single call.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendError {
    pub message: String,
    pub retryable: bool,
    /// Server-provided wait before retrying (e.g. `Retry-After`).
    pub retry_after: Option<Duration>,
}

impl BackendError {
    pub fn fatal(message: impl Into<String>) -> Self {
        BackendError {
            message: message.into(),
            retryable: false,
            retry_after: None,
        }
    }

    pub fn transient(message: impl Into<String>) -> Self {
        BackendError {
            message: message.into(),
            retryable: true,
            retry_after: None,
        }
    }
}

/// Something that answers scoring prompts with raw text.
pub trait ScoringBackend: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: &ScoreRequest<'_>, prompt: &Prompt) -> Result<String, BackendError>;

    /// Number of `complete` calls made so far.
    fn calls(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Wait before retry number `attempt + 1`; a server hint wins over the
    /// exponential schedule. Both are capped at `max_delay`.
    pub fn delay(&self, attempt: u32, hint: Option<Duration>) -> Duration {
        let exp = self.base_delay.saturating_mul(2u32.saturating_pow(attempt.min(16)));
        hint.unwrap_or(exp).min(self.max_delay)
    }
}

/// Scores one request: cache first, otherwise the backend with retries on
/// transient failures and unparseable answers. New results are persisted
/// before being returned.
pub fn score(
    request: &ScoreRequest<'_>,
    backend: &dyn ScoringBackend,
    cache: &ScoreCache,
    policy: &RetryPolicy,
) -> Result<ScoreLevel> {
    let prompt = request.prompt();
    let key = cache_key_for(&prompt::canonical_text(request.kind, &prompt));
    if let Some(level) = cache.get(&key) {
        return Ok(level);
    }
    let mut attempt = 0;
    loop {
        let (err, hint) = match backend.complete(request, &prompt) {
            Ok(raw) => match parse_model_output(&raw) {
                Ok(level) => return cache.insert(key, level, backend.model_id()),
                Err(e) => (e, None),
            },
            Err(e) => (
                Error::Scoring {
                    message: e.message,
                    raw: None,
                    retryable: e.retryable,
                },
                e.retry_after,
            ),
        };
        if !err.is_retryable() {
            return Err(err);
        }
        if attempt >= policy.max_retries {
            return Err(match err {
                Error::Scoring { message, raw, .. } => Error::Scoring {
                    message: format!("gave up after {} attempts: {message}", attempt + 1),
                    raw,
                    retryable: false,
                },
                other => other,
            });
        }
        let wait = policy.delay(attempt, hint);
        warn!(
            "{} scoring attempt {} failed ({err}); retrying in {wait:?}",
            request.kind,
            attempt + 1
        );
        std::thread::sleep(wait);
        attempt += 1;
    }
}

/// A backend, its cache and a retry policy bundled together.
#[derive(Clone)]
pub struct Scorer {
    backend: Arc<dyn ScoringBackend>,
    cache: Arc<ScoreCache>,
    policy: RetryPolicy,
}

impl Scorer {
    pub fn new(backend: Arc<dyn ScoringBackend>, cache: Arc<ScoreCache>, policy: RetryPolicy) -> Self {
        Scorer { backend, cache, policy }
    }

    /// Mock backend with an in-memory cache.
    pub fn mock() -> Self {
        Scorer::new(
            Arc::new(MockScorer::default()),
            Arc::new(ScoreCache::in_memory()),
            RetryPolicy::default(),
        )
    }

    pub fn score(&self, request: &ScoreRequest<'_>) -> Result<ScoreLevel> {
        score(request, self.backend.as_ref(), &self.cache, &self.policy)
    }

    pub fn backend(&self) -> &dyn ScoringBackend {
        self.backend.as_ref()
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }
}

//! Analysis configuration: one JSON document per run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gravity::{ExitDirection, DEFAULT_TOP_K};
use crate::ingest::DEFAULT_MAX_ANCESTORS;
use crate::scoring::RemoteSettings;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub remote: Option<RemoteSettings>,
    /// Sampling temperature sent to the remote model; `null` omits it.
    #[serde(default = "default_temperature")]
    pub temperature: Option<f64>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
}

fn default_temperature() -> Option<f64> {
    Some(0.0)
}
fn default_in_flight() -> usize {
    4
}
fn default_retries() -> u32 {
    3
}
fn default_retry_base_ms() -> u64 {
    500
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            backend: BackendKind::Mock,
            remote: None,
            temperature: default_temperature(),
            max_in_flight: default_in_flight(),
            max_retries: default_retries(),
            retry_base_ms: default_retry_base_ms(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderConfig {
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub remote: Option<RemoteSettings>,
}

/// Per-subreddit replacements for the global modifiers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierOverride {
    pub tm: Option<f64>,
    pub tsm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// Empty means every subreddit in the corpus.
    #[serde(default)]
    pub subreddits: Vec<String>,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub score_cache: Option<PathBuf>,
    #[serde(default)]
    pub embedding_cache: Option<PathBuf>,
    #[serde(default = "one")]
    pub tm: f64,
    #[serde(default = "one")]
    pub tsm: f64,
    #[serde(default)]
    pub modifiers: BTreeMap<String, ModifierOverride>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_max_ancestors")]
    pub max_ancestors: usize,
    #[serde(default)]
    pub pair_cap: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exit_direction: ExitDirection,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn default_top_k() -> usize {
    DEFAULT_TOP_K
}
fn default_max_ancestors() -> usize {
    DEFAULT_MAX_ANCESTORS
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be a positive number, got {v}")))
    }
}

impl AnalysisConfig {
    /// Reads and validates a config file. Relative paths inside it are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut config: AnalysisConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        self.score_cache.iter_mut().for_each(fix);
        self.embedding_cache.iter_mut().for_each(fix);
        self.out_dir.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<()> {
        positive("tm", self.tm)?;
        positive("tsm", self.tsm)?;
        for (sub, o) in &self.modifiers {
            if let Some(tm) = o.tm {
                positive(&format!("modifiers.{sub}.tm"), tm)?;
            }
            if let Some(tsm) = o.tsm {
                positive(&format!("modifiers.{sub}.tsm"), tsm)?;
            }
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.pair_cap == Some(0) {
            return Err(Error::Config("pair_cap must be at least 1 when set".into()));
        }
        if self.scorer.max_in_flight == 0 {
            return Err(Error::Config("scorer.max_in_flight must be at least 1".into()));
        }
        if self.scorer.backend == BackendKind::Remote && self.scorer.remote.is_none() {
            return Err(Error::Config(
                "scorer.backend is remote but scorer.remote is missing".into(),
            ));
        }
        if self.embedder.backend == BackendKind::Remote && self.embedder.remote.is_none() {
            return Err(Error::Config(
                "embedder.backend is remote but embedder.remote is missing".into(),
            ));
        }
        Ok(())
    }

    /// `(tm, tsm)` for `subreddit`, applying overrides.
    pub fn modifiers_for(&self, subreddit: &str) -> (f64, f64) {
        let o = self.modifiers.get(subreddit);
        (
            o.and_then(|o| o.tm).unwrap_or(self.tm),
            o.and_then(|o| o.tsm).unwrap_or(self.tsm),
        )
    }
}

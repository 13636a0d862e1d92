use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::embedding::{Embedder, EmbeddingVector};
use crate::ingest::{Comment, UserHistory};
use crate::metrics::average_ranks;
use crate::{Error, Result};

/// Smallest distance used in the force denominator.
pub const DISTANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_TOP_K: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupModel {
    pub subreddit: String,
    pub mass: f64,
    pub centroid: EmbeddingVector,
    /// Technology modifier (platform-level pull).
    pub tm: f64,
    /// Topic source modifier (topic-level pull).
    pub tsm: f64,
    pub top_k: usize,
}

impl SubgroupModel {
    /// Validates the positivity constraints on mass and modifiers.
    pub fn new(
        subreddit: impl Into<String>,
        mass: f64,
        centroid: EmbeddingVector,
        tm: f64,
        tsm: f64,
        top_k: usize,
    ) -> Result<Self> {
        for (name, v) in [("mass", mass), ("tm", tm), ("tsm", tsm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("subgroup {name} must be positive, got {v}")));
            }
        }
        Ok(SubgroupModel {
            subreddit: subreddit.into(),
            mass,
            centroid,
            tm,
            tsm,
            top_k,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullForce {
    pub user: String,
    pub subreddit: String,
    pub m_user: f64,
    pub d: f64,
    pub f_w: f64,
}

/// Number of distinct authors in `subreddit`.
pub fn subgroup_mass(comments: &[Comment], subreddit: &str) -> Result<f64> {
    let authors: BTreeSet<&str> = comments
        .iter()
        .filter(|c| c.subreddit == subreddit)
        .map(|c| c.author.as_str())
        .collect();
    if authors.is_empty() {
        return Err(Error::Analysis(format!("subreddit {subreddit:?} has no users")));
    }
    Ok(authors.len() as f64)
}

/// Mean embedding of the `top_k` highest-engagement items (ties by id).
/// Items the embedder rejects as degenerate are skipped.
pub fn subgroup_centroid(comments: &[Comment], top_k: usize, embedder: &dyn Embedder) -> Result<EmbeddingVector> {
    if top_k == 0 {
        return Err(Error::Domain("top_k must be at least 1".into()));
    }
    let mut ranked: Vec<&Comment> = comments.iter().collect();
    ranked.sort_by(|a, b| b.engagement.cmp(&a.engagement).then_with(|| a.id.cmp(&b.id)));
    let mut vectors = Vec::new();
    for c in ranked.into_iter().take(top_k) {
        match embedder.embed(&c.body) {
            Ok(v) => vectors.push(v),
            Err(Error::Analysis(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if vectors.is_empty() {
        return Err(Error::Analysis("no embeddable top content".into()));
    }
    EmbeddingVector::mean(&vectors)
}

/// Mean embedding of the user's own messages in `history`.
pub fn user_embedding(history: &UserHistory, embedder: &dyn Embedder) -> Result<EmbeddingVector> {
    let mut vectors = Vec::new();
    for e in &history.entries {
        match embedder.embed(&e.context.message.body) {
            Ok(v) => vectors.push(v),
            Err(Error::Analysis(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if vectors.is_empty() {
        return Err(Error::Analysis(format!(
            "user {:?} has no embeddable messages in {:?}",
            history.user, history.subreddit
        )));
    }
    EmbeddingVector::mean(&vectors)
}

/// `max(1e-6, 1 - cos(u, g))`, in `[1e-6, 2]`.
pub fn ideological_distance(u: &EmbeddingVector, g: &EmbeddingVector) -> Result<f64> {
    if u.dim() != g.dim() {
        return Err(Error::Domain(format!(
            "embedding dimension mismatch: {} vs {}",
            u.dim(),
            g.dim()
        )));
    }
    let (nu, ng) = (u.norm(), g.norm());
    if nu == 0.0 || ng == 0.0 || !nu.is_finite() || !ng.is_finite() {
        return Err(Error::Domain("distance to a zero-norm or non-finite vector".into()));
    }
    let cos = (u.dot(g) / (nu * ng)).clamp(-1.0, 1.0);
    Ok((1.0 - cos).max(DISTANCE_FLOOR))
}

/// `F_w = mass * m_user * TM * TSM / d^2`, proportionality constant 1.
pub fn pull_force(model: &SubgroupModel, user: &str, m_user: f64, d: f64) -> Result<PullForce> {
    if !(m_user > 0.0 && m_user.is_finite()) {
        return Err(Error::Domain(format!("m_user must be positive, got {m_user}")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(PullForce {
        user: user.to_string(),
        subreddit: model.subreddit.clone(),
        m_user,
        d,
        f_w: model.mass * m_user * model.tm * model.tsm / (d * d),
    })
}

/// Which end of the force ordering leaves first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitDirection {
    /// Weakest pull exits first.
    #[default]
    Ascending,
    /// Strongest pull exits first.
    Descending,
}

impl fmt::Display for ExitDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExitDirection::Ascending => "ascending",
            ExitDirection::Descending => "descending",
        })
    }
}

impl FromStr for ExitDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" => Ok(ExitDirection::Ascending),
            "descending" => Ok(ExitDirection::Descending),
            other => Err(Error::Config(format!(
                "exit direction must be ascending or descending, got {other:?}"
            ))),
        }
    }
}

/// Predicted exit rank per user (1 = first to leave, ties averaged).
pub fn simulate_exit_order(forces: &[PullForce], direction: ExitDirection) -> BTreeMap<String, f64> {
    let keys: Vec<f64> = forces
        .iter()
        .map(|f| match direction {
            ExitDirection::Ascending => f.f_w,
            ExitDirection::Descending => -f.f_w,
        })
        .collect();
    forces
        .iter()
        .zip(average_ranks(&keys))
        .map(|(f, r)| (f.user.clone(), r))
        .collect()
}

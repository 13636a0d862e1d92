use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::comment::Comment;
use super::thread::ThreadIndex;
use crate::scoring::ScoreLevel;

pub const DEFAULT_MAX_ANCESTORS: usize = 10;

/// A user's comment, the comment it replies to, and older thread context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommentContext {
    pub message: Comment,
    pub parent: Comment,
    /// Oldest first; possibly truncated.
    pub ancestors: Vec<Comment>,
}

impl CommentContext {
    /// Checks the structural invariants: the parent link matches, ancestors
    /// are strictly chronological and do not include the parent.
    pub fn is_consistent(&self) -> bool {
        self.message.parent_id.as_deref() == Some(self.parent.id.as_str())
            && self.ancestors.windows(2).all(|w| w[0].created_utc < w[1].created_utc)
            && self.ancestors.iter().all(|a| a.id != self.parent.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub context: CommentContext,
    pub support: Option<ScoreLevel>,
}

/// A user's replies within one subreddit, ordered by (created_utc, id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserHistory {
    pub user: String,
    pub subreddit: String,
    pub entries: Vec<HistoryEntry>,
}

impl UserHistory {
    pub fn new(user: impl Into<String>, subreddit: impl Into<String>) -> Self {
        UserHistory {
            user: user.into(),
            subreddit: subreddit.into(),
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn context_for(index: &ThreadIndex, message: &Comment, max_ancestors: usize) -> Option<CommentContext> {
    let parent = index.parent_of(message)?;
    let mut ancestors = Vec::new();
    let mut younger = parent.created_utc;
    for a in index.chain_above(parent).take(max_ancestors) {
        // a chain with non-increasing timestamps is cut at the break
        if a.created_utc >= younger {
            break;
        }
        younger = a.created_utc;
        ancestors.push(a.clone());
    }
    ancestors.reverse();
    Some(CommentContext {
        message: message.clone(),
        parent: parent.clone(),
        ancestors,
    })
}

fn sorted_history(
    user: &str,
    subreddit: &str,
    mut messages: Vec<&Comment>,
    index: &ThreadIndex,
    max_ancestors: usize,
) -> UserHistory {
    messages.sort_by(|a, b| (a.created_utc, &a.id).cmp(&(b.created_utc, &b.id)));
    let entries = messages
        .into_iter()
        .filter_map(|m| context_for(index, m, max_ancestors))
        .map(|context| HistoryEntry { context, support: None })
        .collect();
    UserHistory {
        user: user.to_string(),
        subreddit: subreddit.to_string(),
        entries,
    }
}

/// Every comment by `user` in `subreddit` whose parent is in the corpus,
/// with up to `max_ancestors` older comments from the parent's chain.
/// Thread roots count as parents.
pub fn extract_parent_contexts(user: &str, subreddit: &str, index: &ThreadIndex, max_ancestors: usize) -> UserHistory {
    let messages: Vec<&Comment> = index
        .comments()
        .filter(|c| c.author == user && c.subreddit == subreddit)
        .collect();
    sorted_history(user, subreddit, messages, index, max_ancestors)
}

/// Histories for every author active in `subreddit`, keyed by user. Authors
/// with no replies get an empty history.
pub fn extract_all_histories(
    subreddit: &str,
    index: &ThreadIndex,
    max_ancestors: usize,
) -> BTreeMap<String, UserHistory> {
    let mut by_user: BTreeMap<&str, Vec<&Comment>> = BTreeMap::new();
    for c in index.comments().filter(|c| c.subreddit == subreddit) {
        by_user.entry(c.author.as_str()).or_default().push(c);
    }
    by_user
        .into_iter()
        .map(|(user, msgs)| {
            (
                user.to_string(),
                sorted_history(user, subreddit, msgs, index, max_ancestors),
            )
        })
        .collect()
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::comment::Comment;
use crate::metrics::average_ranks;

/// When a user was last seen and where that puts them in the exit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub user: String,
    pub subreddit: String,
    pub last_active_utc: i64,
    /// 1 = first to go inactive; ties share the average rank.
    pub actual_rank: f64,
    pub predicted_rank: Option<f64>,
}

/// Observed exit order: users ranked by their last activity in `subreddit`,
/// earliest first. Output is sorted by user.
pub fn compute_actual_exit_order(comments: &[Comment], subreddit: &str) -> Vec<ExitRecord> {
    let mut last: BTreeMap<&str, i64> = BTreeMap::new();
    for c in comments.iter().filter(|c| c.subreddit == subreddit) {
        let t = last.entry(c.author.as_str()).or_insert(c.created_utc);
        *t = (*t).max(c.created_utc);
    }
    let times: Vec<f64> = last.values().map(|&t| t as f64).collect();
    let ranks = average_ranks(&times);
    last.into_iter()
        .zip(ranks)
        .map(|((user, t), rank)| ExitRecord {
            user: user.to_string(),
            subreddit: subreddit.to_string(),
            last_active_utc: t,
            actual_rank: rank,
            predicted_rank: None,
        })
        .collect()
}

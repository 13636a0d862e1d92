#![allow(dead_code)]

use std::path::PathBuf;

use gravwell::ingest::{Comment, CommentContext, HistoryEntry, UserHistory};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

const WORDS: &[&str] = &[
    "tax", "rail", "free", "wrong", "agree", "cost", "city", "never", "always", "maybe", "budget", "vote", "soil",
    "water", "evidence", "policy", "yes", "no", "fair", "unfair",
];

pub fn sentence<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..7);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn comment(id: &str, parent: Option<&str>, author: &str, t: i64, body: &str) -> Comment {
    Comment {
        id: id.into(),
        parent_id: parent.map(Into::into),
        thread_id: "t".into(),
        author: author.into(),
        subreddit: "s".into(),
        created_utc: t,
        body: body.into(),
        engagement: 0,
    }
}

/// History of `n` replies by `user` to distinct random parents.
pub fn random_history<R: Rng>(rng: &mut R, user: &str, n: usize) -> UserHistory {
    let mut h = UserHistory::new(user, "s");
    for i in 0..n {
        let pid = format!("{user}-p{i}");
        let parent = comment(&pid, None, "other", 10 * i as i64 + 1, &sentence(rng));
        let message = comment(
            &format!("{user}-m{i}"),
            Some(&pid),
            user,
            10 * i as i64 + 2,
            &sentence(rng),
        );
        h.entries.push(HistoryEntry {
            context: CommentContext {
                message,
                parent,
                ancestors: vec![],
            },
            support: None,
        });
    }
    h
}

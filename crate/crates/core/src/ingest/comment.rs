use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// One comment or post.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub thread_id: String,
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub body: String,
    /// Platform score (upvotes).
    #[serde(rename = "score", default)]
    pub engagement: i64,
}

impl Comment {
    pub fn is_root(&self) -> bool {
        self.parent_id.is_none()
    }
}

/// Output of [`parse_comments`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedComments {
    pub comments: Vec<Comment>,
    /// Lines that were not a usable comment object.
    pub malformed: usize,
    /// Deleted or removed comments.
    pub dropped: usize,
    /// Repeated ids; the first occurrence is kept.
    pub duplicates: usize,
}

fn strip_kind_prefix(s: &str) -> &str {
    // "t1_abc", "t3_xyz"
    let b = s.as_bytes();
    if b.len() > 3 && b[0] == b't' && b[1].is_ascii_digit() && b[2] == b'_' {
        &s[3..]
    } else {
        s
    }
}

fn id_field(obj: &serde_json::Map<String, Value>, key: &str) -> Option<String> {
    let s = match obj.get(key)? {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    let s = strip_kind_prefix(s.trim());
    (!s.is_empty()).then(|| s.to_string())
}

fn int_field(obj: &serde_json::Map<String, Value>, key: &str) -> Option<i64> {
    match obj.get(key)? {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s
            .trim()
            .parse::<i64>()
            .ok()
            .or_else(|| s.trim().parse::<f64>().ok().map(|f| f as i64)),
        _ => None,
    }
}

enum LineOutcome {
    Keep(Comment, bool),
    Dropped,
    Malformed,
}

fn parse_line(line: &str) -> LineOutcome {
    let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(line) else {
        return LineOutcome::Malformed;
    };
    let (Some(id), Some(author), Some(subreddit), Some(created_utc)) = (
        id_field(&obj, "id"),
        obj.get("author").and_then(Value::as_str).map(str::to_string),
        obj.get("subreddit").and_then(Value::as_str).map(str::to_string),
        int_field(&obj, "created_utc"),
    ) else {
        return LineOutcome::Malformed;
    };
    // Submissions carry title/selftext instead of body.
    let body = match obj.get("body") {
        Some(Value::String(b)) => b.clone(),
        Some(_) => return LineOutcome::Malformed,
        None => match obj.get("title").and_then(Value::as_str) {
            Some(title) => match obj.get("selftext").and_then(Value::as_str) {
                Some(text) if !text.is_empty() && text != "[removed]" && text != "[deleted]" => {
                    format!("{title}\n\n{text}")
                }
                _ => title.to_string(),
            },
            None => return LineOutcome::Malformed,
        },
    };
    let parent_id = id_field(&obj, "parent_id");
    if created_utc <= 0 || parent_id.as_deref() == Some(id.as_str()) {
        return LineOutcome::Malformed;
    }
    if author == "[deleted]" || body.trim().is_empty() || body == "[removed]" || body == "[deleted]" {
        return LineOutcome::Dropped;
    }
    let explicit_thread = id_field(&obj, "thread_id").or_else(|| id_field(&obj, "link_id"));
    let has_thread = explicit_thread.is_some();
    let thread_id = explicit_thread.unwrap_or_default();
    let engagement = int_field(&obj, "score").unwrap_or(0);
    LineOutcome::Keep(
        Comment {
            id,
            parent_id,
            thread_id,
            author,
            subreddit,
            created_utc,
            body,
            engagement,
        },
        has_thread,
    )
}

/// Fills in missing thread ids by walking parent links; roots are their own
/// thread, and a chain that leaves the corpus uses its topmost known id.
fn resolve_thread_ids(comments: &mut [Comment], known: &[bool]) {
    let pos: HashMap<String, usize> = comments.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
    let mut resolved: Vec<Option<String>> = comments
        .iter()
        .zip(known)
        .map(|(c, &k)| k.then(|| c.thread_id.clone()))
        .collect();
    for start in 0..comments.len() {
        if resolved[start].is_some() {
            continue;
        }
        let mut cur = start;
        let mut steps = 0;
        let thread = loop {
            if let Some(t) = &resolved[cur] {
                break t.clone();
            }
            let next = comments[cur].parent_id.as_ref().and_then(|p| pos.get(p).copied());
            match next {
                Some(n) if steps <= comments.len() => {
                    cur = n;
                    steps += 1;
                }
                // root, orphan, or cycle
                _ => {
                    break comments[cur]
                        .parent_id
                        .clone()
                        .unwrap_or_else(|| comments[cur].id.clone())
                }
            }
        };
        resolved[start] = Some(thread);
    }
    for (c, t) in comments.iter_mut().zip(resolved) {
        c.thread_id = t.expect("every thread id resolved");
    }
}

/// Parses a JSON Lines comment dump.
///
/// Malformed lines are counted and skipped; deleted authors and removed
/// bodies are dropped. Only a failure of the underlying reader is fatal.
pub fn parse_comments<R: BufRead>(mut reader: R) -> Result<ParsedComments> {
    let mut out = ParsedComments::default();
    let mut known_thread = Vec::new();
    let mut seen = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| Error::Read { line: line_no, source })?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            out.malformed += 1;
            continue;
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_line(line) {
            LineOutcome::Keep(c, has_thread) => {
                if seen.insert(c.id.clone()) {
                    known_thread.push(has_thread);
                    out.comments.push(c);
                } else {
                    out.duplicates += 1;
                }
            }
            LineOutcome::Dropped => out.dropped += 1,
            LineOutcome::Malformed => {
                debug!("line {line_no}: malformed comment record");
                out.malformed += 1;
            }
        }
    }
    resolve_thread_ids(&mut out.comments, &known_thread);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ParsedComments {
        parse_comments(s.as_bytes()).unwrap()
    }

    #[test]
    fn empty_stream() {
        let p = parse("");
        assert!(p.comments.is_empty());
        assert_eq!(p.malformed, 0);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let src = r#"{"id":"a","author":"x","subreddit":"s","created_utc":1,"body":"hi"}
{"id":"b","author":"y","subreddit":"s","created_utc":2,"body":"yo","parent_id":"t1_a"}
not json at all
{"id":"c","author":"z","subreddit":"s","created_utc":3,"body":"sup","parent_id":"t1_b"}
"#;
        let p = parse(src);
        assert_eq!(p.comments.len(), 3);
        assert_eq!(p.malformed, 1);
    }

    #[test]
    fn deleted_and_removed_are_dropped() {
        let src = r#"{"id":"a","author":"[deleted]","subreddit":"s","created_utc":1,"body":"hi"}
{"id":"b","author":"y","subreddit":"s","created_utc":2,"body":"[removed]"}
{"id":"c","author":"z","subreddit":"s","created_utc":3,"body":"kept"}
"#;
        let p = parse(src);
        assert_eq!(p.comments.len(), 1);
        assert_eq!(p.comments[0].id, "c");
        assert_eq!(p.dropped, 2);
    }

    #[test]
    fn prefixes_stripped_and_threads_taken_from_link_id() {
        let src = r#"{"id":"c1","author":"x","subreddit":"s","created_utc":"1700000000","body":"hi","parent_id":"t3_p1","link_id":"t3_p1","score":5}"#;
        let p = parse(src);
        let c = &p.comments[0];
        assert_eq!(c.parent_id.as_deref(), Some("p1"));
        assert_eq!(c.thread_id, "p1");
        assert_eq!(c.created_utc, 1_700_000_000);
        assert_eq!(c.engagement, 5);
    }

    #[test]
    fn submissions_use_title_and_selftext() {
        let src = r#"{"id":"p1","author":"op","subreddit":"s","created_utc":5,"title":"Title","selftext":"Text"}"#;
        let p = parse(src);
        assert_eq!(p.comments[0].body, "Title\n\nText");
        assert!(p.comments[0].is_root());
        assert_eq!(p.comments[0].thread_id, "p1");
    }

    #[test]
    fn missing_thread_ids_follow_parents() {
        let src = r#"{"id":"r","author":"a","subreddit":"s","created_utc":1,"body":"root"}
{"id":"x","author":"b","subreddit":"s","created_utc":2,"body":"r1","parent_id":"r"}
{"id":"y","author":"c","subreddit":"s","created_utc":3,"body":"r2","parent_id":"x"}
{"id":"z","author":"c","subreddit":"s","created_utc":3,"body":"orphan","parent_id":"gone"}
"#;
        let p = parse(src);
        let threads: Vec<_> = p.comments.iter().map(|c| c.thread_id.as_str()).collect();
        assert_eq!(threads, vec!["r", "r", "r", "gone"]);
    }

    #[test]
    fn invalid_records_are_malformed() {
        let src = r#"{"id":"a","author":"x","subreddit":"s","created_utc":0,"body":"zero time"}
{"id":"b","author":"x","subreddit":"s","created_utc":1,"body":"self parent","parent_id":"b"}
{"id":"c","author":"x","created_utc":1,"body":"no subreddit"}
[1,2,3]
"#;
        let p = parse(src);
        assert!(p.comments.is_empty());
        assert_eq!(p.malformed, 4);
    }

    #[test]
    fn duplicate_ids_keep_first() {
        let src = r#"{"id":"a","author":"x","subreddit":"s","created_utc":1,"body":"first"}
{"id":"a","author":"x","subreddit":"s","created_utc":2,"body":"second"}
"#;
        let p = parse(src);
        assert_eq!(p.comments.len(), 1);
        assert_eq!(p.comments[0].body, "first");
        assert_eq!(p.duplicates, 1);
    }

    struct FailAfter {
        data: std::io::Cursor<Vec<u8>>,
    }

    impl std::io::Read for FailAfter {
        fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
            let n = self.data.read(buf)?;
            if n == 0 {
                Err(std::io::Error::other("disk gone"))
            } else {
                Ok(n)
            }
        }
    }

    #[test]
    fn io_failure_reports_last_good_line() {
        let src = b"{\"id\":\"a\",\"author\":\"x\",\"subreddit\":\"s\",\"created_utc\":1,\"body\":\"hi\"}\n".to_vec();
        let reader = std::io::BufReader::new(FailAfter {
            data: std::io::Cursor::new(src),
        });
        match parse_comments(reader) {
            Err(Error::Read { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected read error, got {other:?}"),
        }
    }
}

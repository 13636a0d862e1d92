use std::collections::{BTreeMap, BTreeSet};

use super::comment::Comment;
use crate::{Error, Result};

/// Comments grouped by thread with parent/child links.
///
/// All collections are ordered, so the index does not depend on the order
/// comments were supplied in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ThreadIndex {
    comments: BTreeMap<String, Comment>,
    /// thread id -> comment ids by (created_utc, id)
    threads: BTreeMap<String, Vec<String>>,
    /// parent id -> child ids by (created_utc, id)
    children: BTreeMap<String, Vec<String>>,
    /// non-root comments whose parent is not in the corpus
    orphans: BTreeSet<String>,
}

impl ThreadIndex {
    pub fn get(&self, id: &str) -> Option<&Comment> {
        self.comments.get(id)
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    /// All comments, ordered by id.
    pub fn comments(&self) -> impl Iterator<Item = &Comment> {
        self.comments.values()
    }

    pub fn parent_of(&self, comment: &Comment) -> Option<&Comment> {
        comment.parent_id.as_deref().and_then(|p| self.comments.get(p))
    }

    pub fn children_of(&self, id: &str) -> &[String] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn threads(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.threads.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn is_orphan(&self, id: &str) -> bool {
        self.orphans.contains(id)
    }

    pub fn orphans(&self) -> impl Iterator<Item = &str> {
        self.orphans.iter().map(String::as_str)
    }

    /// Parent chain above `comment`, nearest first (parent, grandparent, ...).
    pub fn chain_above<'a>(&'a self, comment: &'a Comment) -> impl Iterator<Item = &'a Comment> + 'a {
        std::iter::successors(self.parent_of(comment), move |c| self.parent_of(c))
    }

    fn sort_ids(&self, ids: &mut [String]) {
        ids.sort_by(|a, b| {
            let (ca, cb) = (&self.comments[a], &self.comments[b]);
            (ca.created_utc, &ca.id).cmp(&(cb.created_utc, &cb.id))
        });
    }
}

fn find_cycle(comments: &BTreeMap<String, Comment>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
    for start in comments.keys() {
        if marks.contains_key(start.as_str()) {
            continue;
        }
        let mut path: Vec<&str> = Vec::new();
        let mut cur = Some(start.as_str());
        while let Some(id) = cur {
            match marks.get(id) {
                Some(Mark::Done) => break,
                Some(Mark::Open) => {
                    let at = path.iter().position(|p| *p == id).expect("open node is on path");
                    let mut cycle: Vec<String> = path[at..].iter().map(|s| s.to_string()).collect();
                    let min = cycle
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.cmp(b.1))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    cycle.rotate_left(min);
                    return Some(cycle);
                }
                None => {
                    marks.insert(id, Mark::Open);
                    path.push(id);
                    cur = comments[id].parent_id.as_deref().filter(|p| comments.contains_key(*p));
                }
            }
        }
        for id in path {
            marks.insert(id, Mark::Done);
        }
    }
    None
}

/// Links comments into threads. Orphans are kept and flagged; a cycle in the
/// parent links is a corpus error.
pub fn build_threads(comments: &[Comment]) -> Result<ThreadIndex> {
    let mut index = ThreadIndex::default();
    for c in comments {
        if index.comments.insert(c.id.clone(), c.clone()).is_some() {
            return Err(Error::DuplicateId(c.id.clone()));
        }
    }
    if let Some(cycle) = find_cycle(&index.comments) {
        return Err(Error::Cycle(cycle));
    }

    let mut threads: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut orphans = BTreeSet::new();
    for c in index.comments.values() {
        threads.entry(c.thread_id.clone()).or_default().push(c.id.clone());
        if let Some(p) = &c.parent_id {
            if index.comments.contains_key(p) {
                children.entry(p.clone()).or_default().push(c.id.clone());
            } else {
                orphans.insert(c.id.clone());
            }
        }
    }
    for ids in threads.values_mut().chain(children.values_mut()) {
        index.sort_ids(ids);
    }
    index.threads = threads;
    index.children = children;
    index.orphans = orphans;
    Ok(index)
}

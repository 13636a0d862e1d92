//! Comment dumps in, threads, per-user parent contexts and exit orders out.

mod comment;
mod exit;
mod history;
mod thread;

pub use comment::{parse_comments, Comment, ParsedComments};
pub use exit::{compute_actual_exit_order, ExitRecord};
pub use history::{
    extract_all_histories, extract_parent_contexts, CommentContext, HistoryEntry, UserHistory, DEFAULT_MAX_ANCESTORS,
};
pub use thread::{build_threads, ThreadIndex};

//! System prompts and request payloads for the support and alignment scorers.

use serde::Serialize;

use super::ScoreKind;
use crate::ingest::{Comment, CommentContext};

const OUTPUT_CONTRACT: &str = "Respond with exactly one number from {-1, -0.5, 0, 0.5, 1} and nothing else.";

pub const SUPPORT_SYSTEM_PROMPT: &str = "\
You'll receive:
- message: a comment in a Reddit thread
- parent: message's direct parent
- ancestors: the thread's previous post/comments (in chronological order, may be incomplete)

Evaluate how much the message supports the parent message. Ancestors provide contextualization.

Output format:
-1: vehemently opposes parent
-0.5: opposes parent with restraint
0: neutral
0.5: supports parent with restraint
1: passionately supports parent
";

pub const ALIGNMENT_SYSTEM_PROMPT: &str = "\
You'll receive two comment_contexts, each containing:
- message: comment in a Reddit thread
- parent: message's direct parent
- ancestors: the thread's previous post/comments (in chronological order, may be incomplete)

Evaluate how much the two messages' underlying opinions align, like an n-dimensional dot product. Parents and ancestors provide contextualization.

Output format. The two messages' opinions...
-1: disagree
-0.5: might disagree
0: are independent, despite topic overlap
0.5: agree with restraint
1: ardently agree

Guidelines:
- Passionate opinions in similar topics may still be orthogonal: EVs make city streets way quieter. Mining for EV batteries wrecks ecosystems and exploits workers.
- Compare opinions, not facts. Opinions may be implicit, or expressed through tone.
";

/// A chat prompt: system instructions plus the JSON user payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Serialize)]
struct PromptComment<'a> {
    author: &'a str,
    body: &'a str,
}

impl<'a> From<&'a Comment> for PromptComment<'a> {
    fn from(c: &'a Comment) -> Self {
        PromptComment {
            author: &c.author,
            body: &c.body,
        }
    }
}

#[derive(Serialize)]
struct SupportPayload<'a> {
    message: PromptComment<'a>,
    parent: PromptComment<'a>,
    ancestors: Vec<PromptComment<'a>>,
}

#[derive(Serialize)]
struct AlignedContext<'a> {
    message: PromptComment<'a>,
    parent: Option<PromptComment<'a>>,
    ancestors: Vec<PromptComment<'a>>,
}

#[derive(Serialize)]
struct AlignmentPayload<'a> {
    comment_context_1: AlignedContext<'a>,
    comment_context_2: AlignedContext<'a>,
}

fn system_text(rubric: &str) -> String {
    format!("{rubric}\n{OUTPUT_CONTRACT}")
}

fn to_json<T: Serialize>(payload: &T) -> String {
    serde_json::to_string_pretty(payload).expect("prompt payload serializes")
}

/// Prompt asking how strongly `ctx.message` supports `ctx.parent`.
pub fn build_support_prompt(ctx: &CommentContext) -> Prompt {
    let payload = SupportPayload {
        message: (&ctx.message).into(),
        parent: (&ctx.parent).into(),
        ancestors: ctx.ancestors.iter().map(Into::into).collect(),
    };
    Prompt {
        system: system_text(SUPPORT_SYSTEM_PROMPT),
        user: to_json(&payload),
    }
}

/// The compared opinion is the parent the user replied to, so each context
/// is lifted one level: the parent becomes the message, its nearest ancestor
/// the parent (absent for thread roots), and the rest stay as ancestors.
fn lift(ctx: &CommentContext) -> AlignedContext<'_> {
    let (parent, ancestors) = match ctx.ancestors.split_last() {
        Some((nearest, older)) => (Some(nearest.into()), older.iter().map(Into::into).collect()),
        None => (None, Vec::new()),
    };
    AlignedContext {
        message: (&ctx.parent).into(),
        parent,
        ancestors,
    }
}

/// Prompt asking how well the opinions of the two parents align. The
/// payload keeps the caller's `(first, second)` order.
pub fn build_alignment_prompt(first: &CommentContext, second: &CommentContext) -> Prompt {
    let payload = AlignmentPayload {
        comment_context_1: lift(first),
        comment_context_2: lift(second),
    };
    Prompt {
        system: system_text(ALIGNMENT_SYSTEM_PROMPT),
        user: to_json(&payload),
    }
}

/// Text the cache key and mock scorer are derived from: the kind tag
/// followed by the user payload.
pub(crate) fn canonical_text(kind: ScoreKind, prompt: &Prompt) -> String {
    format!("{}\n{}", kind.as_str(), prompt.user)
}

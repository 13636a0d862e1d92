use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use super::{BackendError, Prompt, ScoreLevel, ScoreRequest, ScoringBackend};

/// Deterministic stand-in for a chat model: SHA-256 of the canonical request
/// text, first eight bytes big-endian, modulo 5, picks the level.
pub fn mock_score(request: &ScoreRequest<'_>) -> ScoreLevel {
    let digest = Sha256::new()
        .chain_update(b"gravwell-mock\n")
        .chain_update(request.canonical_text().as_bytes())
        .finalize();
    let word = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
    ScoreLevel::from_ordinal((word % 5) as usize).expect("ordinal < 5")
}

/// Backend answering with [`mock_score`]; counts calls.
#[derive(Debug, Default)]
pub struct MockScorer {
    calls: AtomicUsize,
}

impl ScoringBackend for MockScorer {
    fn model_id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &ScoreRequest<'_>, _prompt: &Prompt) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(mock_score(request).to_string())
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

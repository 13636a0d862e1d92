//! Per-user confirmation-bias mass.
//!
//! Every pair of a user's parent comments contributes
//! `(support_i ⊗ support_j) ⊗ alignment_ij`; the mean over pairs lies in
//! `[-1, 1]` and is mapped affinely onto `[0.5, 2]`.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ingest::UserHistory;
use crate::scoring::{ScoreKind, ScoreLevel, ScoreRequest, Scorer};
use crate::{Error, Result};

fn unchecked_otimes(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p == 0.0 {
        return 0.0;
    }
    // |p| (1 - ln|p|) is the CDF of |XY| for X, Y ~ U[0, 1]
    (p * (1.0 - p.abs().ln())).clamp(-1.0, 1.0)
}

/// `a ⊗ b = ab (1 - ln|ab|)`, and 0 when `ab = 0`.
///
/// Maps products of independent `U[-1, 1]` variables back onto `U[-1, 1]`.
/// Inputs outside `[-1, 1]` are rejected.
pub fn otimes(a: f64, b: f64) -> Result<f64> {
    for v in [a, b] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("otimes operand {v} outside [-1, 1]")));
        }
    }
    Ok(unchecked_otimes(a, b))
}

/// Net bias contribution of one pair, folded left to right:
/// `(support_i ⊗ support_j) ⊗ alignment`.
pub fn pair_contribution(support_i: ScoreLevel, support_j: ScoreLevel, alignment: ScoreLevel) -> f64 {
    unchecked_otimes(
        unchecked_otimes(support_i.value(), support_j.value()),
        alignment.value(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairContribution {
    pub i: usize,
    pub j: usize,
    pub support_i: ScoreLevel,
    pub support_j: ScoreLevel,
    pub alignment: ScoreLevel,
    pub contribution: f64,
}

impl PairContribution {
    pub fn new(i: usize, j: usize, support_i: ScoreLevel, support_j: ScoreLevel, alignment: ScoreLevel) -> Self {
        debug_assert!(i < j);
        PairContribution {
            i,
            j,
            support_i,
            support_j,
            alignment,
            contribution: pair_contribution(support_i, support_j, alignment),
        }
    }
}

/// Mean contribution over the scored pairs `(i, j)` in `alignments`, skipping
/// pairs whose entries lack a support score. Returns `(mean, pair_count)`;
/// fewer than two entries, or no usable pair, gives `(0, 0)`.
pub fn bias_unweighted(history: &UserHistory, alignments: &BTreeMap<(usize, usize), ScoreLevel>) -> (f64, usize) {
    if history.len() < 2 {
        return (0.0, 0);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&(i, j), &align) in alignments {
        let (Some(a), Some(b)) = (
            history.entries.get(i).and_then(|e| e.support),
            history.entries.get(j).and_then(|e| e.support),
        ) else {
            continue;
        };
        if i >= j {
            continue;
        }
        sum += pair_contribution(a, b, align);
        count += 1;
    }
    if count == 0 {
        (0.0, 0)
    } else {
        ((sum / count as f64).clamp(-1.0, 1.0), count)
    }
}

/// Maps the mean onto `[0.5, 2]`: `1.25 + 0.75 m`, or exactly 1 when there
/// is nothing to average (fewer than two contexts or no scored pair).
pub fn normalize_bias(m_unweighted: f64, n: usize, pair_count: usize) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&m_unweighted));
    if n >= 2 && pair_count > 0 {
        1.25 + 0.75 * m_unweighted
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScore {
    pub user: String,
    pub subreddit: String,
    /// Parent contexts whose support could be scored.
    pub n: usize,
    pub pair_count: usize,
    pub m_unweighted: f64,
    pub m_a: f64,
}

/// A request that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringFailure {
    pub kind: ScoreKind,
    /// History entry indices involved (one for support, two for alignment).
    pub entries: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasOutcome {
    pub score: BiasScore,
    pub failures: Vec<ScoringFailure>,
    /// Supports filled in for every entry that could be scored.
    pub history: UserHistory,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasOptions {
    /// Score at most this many pairs, sampled uniformly without replacement.
    pub pair_cap: Option<usize>,
    pub seed: u64,
}

fn pair_seed(seed: u64, user: &str, subreddit: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_be_bytes())
        .chain_update(user.as_bytes())
        .chain_update([0u8])
        .chain_update(subreddit.as_bytes())
        .finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Unranks `k` into the `k`-th pair `(a, b)`, `a < b < n`, in
/// lexicographic order.
fn nth_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = n - a - 1;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
        a += 1;
    }
}

/// Pairs of positions in `0..n` to score, ascending.
fn select_pairs(n: usize, cap: Option<usize>, seed: u64) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    match cap {
        Some(cap) if cap < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<usize> = index::sample(&mut rng, total, cap).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|k| nth_pair(k, n)).collect()
        }
        _ => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
    }
}

fn scoring_failure(err: Error, kind: ScoreKind, entries: Vec<usize>) -> Result<ScoringFailure> {
    match err {
        Error::Scoring { message, .. } => Ok(ScoringFailure { kind, entries, message }),
        other => Err(other),
    }
}

/// Scores supports and pair alignments for one history and reduces them to a
/// [`BiasScore`]. Individual scoring failures are recorded and skipped; any
/// other error aborts.
pub fn compute_user_bias(history: &UserHistory, scorer: &Scorer, options: &BiasOptions) -> Result<BiasOutcome> {
    let supports: Vec<Result<ScoreLevel>> = history
        .entries
        .par_iter()
        .map(|e| scorer.score(&ScoreRequest::support(&e.context)))
        .collect();

    let mut scored = history.clone();
    let mut failures = Vec::new();
    for (i, (entry, result)) in scored.entries.iter_mut().zip(supports).enumerate() {
        match result {
            Ok(level) => entry.support = Some(level),
            Err(e) => {
                entry.support = None;
                failures.push(scoring_failure(e, ScoreKind::Support, vec![i])?);
            }
        }
    }

    let usable: Vec<usize> = scored
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.support.is_some())
        .map(|(i, _)| i)
        .collect();
    let n = usable.len();
    let pairs: Vec<(usize, usize)> = select_pairs(
        n,
        options.pair_cap,
        pair_seed(options.seed, &history.user, &history.subreddit),
    )
    .into_iter()
    .map(|(a, b)| (usable[a], usable[b]))
    .collect();

    let aligned: Vec<((usize, usize), Result<ScoreLevel>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let req = ScoreRequest::alignment(&scored.entries[i].context, &scored.entries[j].context);
            ((i, j), scorer.score(&req))
        })
        .collect();

    let mut alignments = BTreeMap::new();
    for ((i, j), result) in aligned {
        match result {
            Ok(level) => {
                alignments.insert((i, j), level);
            }
            Err(e) => failures.push(scoring_failure(e, ScoreKind::Alignment, vec![i, j])?),
        }
    }

    let (m_unweighted, pair_count) = if n < 2 {
        (0.0, 0)
    } else {
        bias_unweighted(&scored, &alignments)
    };
    let score = BiasScore {
        user: history.user.clone(),
        subreddit: history.subreddit.clone(),
        n,
        pair_count,
        m_unweighted,
        m_a: normalize_bias(m_unweighted, n, pair_count),
    };
    Ok(BiasOutcome {
        score,
        failures,
        history: scored,
    })
}

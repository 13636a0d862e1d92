use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::rank::{average_ranks, RankSeries};
use super::student_t::student_t_sf;
use crate::{Error, Result};

/// Pearson correlation of average ranks. Inputs are re-ranked, so raw scores
/// and valid rank vectors give the same answer.
fn rank_pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedStatistic(format!(
            "spearman rho needs at least 2 items, got {n}"
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedStatistic(
            "spearman rho undefined for a constant ranking".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation between two rankings of the same items.
pub fn spearman_rho(a: &RankSeries, b: &RankSeries) -> Result<f64> {
    let lookup: HashMap<&str, f64> = b.pairs.iter().map(|(id, r)| (id.as_str(), *r)).collect();
    if lookup.len() != b.pairs.len() || a.pairs.len() != b.pairs.len() {
        return Err(Error::UndefinedStatistic(
            "rank series must cover the same distinct items".into(),
        ));
    }
    let mut xs = Vec::with_capacity(a.n());
    let mut ys = Vec::with_capacity(a.n());
    for (id, r) in &a.pairs {
        let other = lookup
            .get(id.as_str())
            .ok_or_else(|| Error::UndefinedStatistic(format!("item {id:?} missing from second series")))?;
        xs.push(*r);
        ys.push(*other);
    }
    rank_pearson(&xs, &ys)
}

/// One-sided (positive association) p-value for a Spearman correlation,
/// using the t approximation with `n - 2` degrees of freedom.
pub fn spearman_p_value(rho: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::UndefinedStatistic(format!(
            "p-value needs at least 3 items, got {n}"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho {rho} outside [-1, 1]")));
    }
    if rho == 1.0 {
        return Ok(0.0);
    }
    if rho == -1.0 {
        return Ok(1.0);
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    Ok(student_t_sf(t, df))
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub subreddit: String,
    pub n_common: usize,
    /// `None` marks insufficient data (fewer than 3 shared users or a
    /// constant ranking).
    pub spearman_rho: Option<f64>,
    pub p_value: Option<f64>,
}

impl Evaluation {
    pub fn is_insufficient(&self) -> bool {
        self.spearman_rho.is_none()
    }
}

/// Compares predicted and actual exit ranks over the users both contain.
/// Ranks are recomputed within the intersection.
pub fn evaluate_subreddit(
    subreddit: &str,
    predicted: &BTreeMap<String, f64>,
    actual: &BTreeMap<String, f64>,
) -> Evaluation {
    let (xs, ys): (Vec<f64>, Vec<f64>) = predicted
        .iter()
        .filter_map(|(user, p)| actual.get(user).map(|a| (*p, *a)))
        .unzip();
    let n_common = xs.len();
    let mut eval = Evaluation {
        subreddit: subreddit.to_string(),
        n_common,
        spearman_rho: None,
        p_value: None,
    };
    if n_common < 3 {
        return eval;
    }
    if let Ok(rho) = rank_pearson(&xs, &ys) {
        eval.spearman_rho = Some(rho);
        eval.p_value = spearman_p_value(rho, n_common).ok();
    }
    eval
}

use serde::{Deserialize, Serialize};

use crate::scoring::{ScoreKind, ScoreLevel};
use crate::{Error, Result};

/// A human label paired with the scorer's answer for the same prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub kind: ScoreKind,
    pub human: ScoreLevel,
    pub ai: ScoreLevel,
}

/// Quadratic-weighted kappa over the five ordinal levels, with weights
/// `(i - j)^2 / 16`. Returns 1 when neither observed nor expected
/// disagreement exists.
pub fn quadratic_weighted_kappa(samples: &[CalibrationSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::UndefinedStatistic("kappa of an empty sample".into()));
    }
    let k = ScoreLevel::ALL.len();
    let mut observed = [[0.0f64; 5]; 5];
    let mut human = [0.0f64; 5];
    let mut ai = [0.0f64; 5];
    for s in samples {
        let (i, j) = (s.human.ordinal(), s.ai.ordinal());
        observed[i][j] += 1.0;
        human[i] += 1.0;
        ai[j] += 1.0;
    }
    let n = samples.len() as f64;
    let max_d2 = ((k - 1) * (k - 1)) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64) - (j as f64)).powi(2) / max_d2;
            num += w * observed[i][j];
            den += w * human[i] * ai[j] / n;
        }
    }
    if den == 0.0 {
        // single shared category: no disagreement observed or expected
        return Ok(1.0);
    }
    Ok(1.0 - num / den)
}

/// Mean absolute difference divided by the score range (2.0).
pub fn normalized_mae(samples: &[CalibrationSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::UndefinedStatistic("NMAE of an empty sample".into()));
    }
    let total: f64 = samples.iter().map(|s| (s.human.value() - s.ai.value()).abs()).sum();
    Ok(total / samples.len() as f64 / ScoreLevel::RANGE)
}

/// Verbal band for a kappa value.
pub fn agreement_band(kappa: f64) -> &'static str {
    if kappa < 0.2 {
        "slight"
    } else if kappa < 0.4 {
        "fair"
    } else if kappa < 0.6 {
        "moderate"
    } else if kappa <= 0.8 {
        "substantial"
    } else {
        "near-perfect"
    }
}

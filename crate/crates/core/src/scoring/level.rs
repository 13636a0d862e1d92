use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Five-valued score shared by support and alignment judgements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreLevel {
    StronglyNegative,
    Negative,
    Neutral,
    Positive,
    StronglyPositive,
}

impl ScoreLevel {
    pub const ALL: [ScoreLevel; 5] = [
        ScoreLevel::StronglyNegative,
        ScoreLevel::Negative,
        ScoreLevel::Neutral,
        ScoreLevel::Positive,
        ScoreLevel::StronglyPositive,
    ];

    /// Width of the value range, `1 - (-1)`.
    pub const RANGE: f64 = 2.0;

    pub fn value(self) -> f64 {
        match self {
            ScoreLevel::StronglyNegative => -1.0,
            ScoreLevel::Negative => -0.5,
            ScoreLevel::Neutral => 0.0,
            ScoreLevel::Positive => 0.5,
            ScoreLevel::StronglyPositive => 1.0,
        }
    }

    /// Position on the ordinal scale, 0 (= -1) through 4 (= 1).
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Exact match against the five levels.
    pub fn from_value(v: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.value() == v)
    }

    /// Nearest level; exact midpoints go to the level closer to zero.
    /// Returns `None` for NaN.
    pub fn snap(v: f64) -> Option<Self> {
        if v.is_nan() {
            return None;
        }
        let v = v.clamp(-1.0, 1.0);
        let mut best = ScoreLevel::Neutral;
        let mut best_dist = f64::INFINITY;
        for l in Self::ALL {
            let dist = (v - l.value()).abs();
            if dist < best_dist || (dist == best_dist && l.value().abs() < best.value().abs()) {
                best = l;
                best_dist = dist;
            }
        }
        Some(best)
    }
}

impl fmt::Display for ScoreLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for ScoreLevel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for ScoreLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        ScoreLevel::from_value(v)
            .ok_or_else(|| serde::de::Error::custom(format!("{v} is not one of -1, -0.5, 0, 0.5, 1")))
    }
}

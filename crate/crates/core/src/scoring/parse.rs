use super::ScoreLevel;
use crate::{Error, Result};

/// First standalone decimal number in `text`, e.g. `-0.5`, `1`, `.5`.
/// Digits glued to letters (`o4`) are not numbers.
fn first_number(text: &str) -> Option<f64> {
    let normalized = text.replace('\u{2212}', "-");
    let b = normalized.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let boundary = i == 0 || !(b[i - 1].is_ascii_alphanumeric() || b[i - 1] == b'_');
        if boundary {
            let mut j = i;
            if b[j] == b'-' || b[j] == b'+' {
                j += 1;
            }
            let int_start = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let mut has_digits = j > int_start;
            if j < b.len() && b[j] == b'.' {
                let frac_start = j + 1;
                let mut k = frac_start;
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                if k > frac_start {
                    has_digits = true;
                    j = k;
                }
            }
            let glued = j < b.len() && (b[j].is_ascii_alphabetic() || b[j] == b'_');
            if has_digits && !glued {
                if let Ok(v) = normalized[i..j].parse::<f64>() {
                    return Some(v);
                }
            }
            if has_digits {
                i = j.max(i + 1);
                continue;
            }
        }
        i += 1;
    }
    None
}

/// Reads a model answer: the first number, snapped to the nearest level
/// (midpoints toward 0). No number is a retryable error carrying the raw text.
pub fn parse_model_output(text: &str) -> Result<ScoreLevel> {
    first_number(text)
        .and_then(ScoreLevel::snap)
        .ok_or_else(|| Error::Scoring {
            message: "model output contains no score".into(),
            raw: Some(text.to_string()),
            retryable: true,
        })
}

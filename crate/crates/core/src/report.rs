//! Report files: bias JSONL, force CSV, evaluation CSV, calibration JSON,
//! diagnostics JSONL and the corpus summary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::metrics::Evaluation;
use crate::scoring::ScoreKind;
use crate::{Error, Result};

pub const CORPUS_SUMMARY_FILE: &str = "corpus_summary.json";
pub const BIAS_FILE: &str = "bias.jsonl";
pub const FORCES_FILE: &str = "forces.csv";
pub const EVALUATION_FILE: &str = "evaluation.csv";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub user: String,
    pub subreddit: String,
    pub n: usize,
    pub pair_count: usize,
    pub m_unweighted: f64,
    pub m_a: f64,
    /// Support and alignment requests that could not be scored.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRow {
    pub user: String,
    pub subreddit: String,
    pub m_a: f64,
    pub d: f64,
    pub f_w: f64,
    pub predicted_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub kind: ScoreKind,
    pub n: usize,
    pub qwk: f64,
    pub nmae: f64,
    pub agreement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Diagnostic {
    MalformedLines {
        input: String,
        count: usize,
    },
    ScoringFailure {
        subreddit: String,
        user: String,
        kind: ScoreKind,
        entries: Vec<usize>,
        message: String,
    },
    UserSkipped {
        subreddit: String,
        user: String,
        reason: String,
    },
    SubredditSkipped {
        subreddit: String,
        reason: String,
    },
    InsufficientData {
        subreddit: String,
        n_common: usize,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::file(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| Error::Report(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::file(path, e))?;
    }
    w.flush().map_err(|e| Error::file(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Report(format!("{}:{}: {e}", path.display(), n + 1)))?);
    }
    Ok(out)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    let err = |e: csv::Error| Error::Report(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::file(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Report(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::file(path, e))
}

pub fn write_bias_report(path: &Path, rows: &[BiasRecord]) -> Result<()> {
    write_jsonl(path, rows)
}

pub fn read_bias_report(path: &Path) -> Result<Vec<BiasRecord>> {
    read_jsonl(path)
}

pub const FORCE_HEADER: [&str; 6] = ["user", "subreddit", "m_a", "d", "f_w", "predicted_rank"];
pub const EVALUATION_HEADER: [&str; 4] = ["subreddit", "n_common", "spearman_rho", "p_value"];

pub fn write_force_table(path: &Path, rows: &[ForceRow]) -> Result<()> {
    write_csv(path, rows, &FORCE_HEADER)
}

pub fn read_force_table(path: &Path) -> Result<Vec<ForceRow>> {
    read_csv(path)
}

/// Insufficient-data rows leave `spearman_rho` and `p_value` empty.
pub fn write_evaluation(path: &Path, rows: &[Evaluation]) -> Result<()> {
    write_csv(path, rows, &EVALUATION_HEADER)
}

pub fn read_evaluation(path: &Path) -> Result<Vec<Evaluation>> {
    read_csv(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_round_trip_with_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rows = vec![
            Evaluation {
                subreddit: "math".into(),
                n_common: 5951,
                spearman_rho: Some(0.02445433064),
                p_value: Some(0.029623264415),
            },
            Evaluation {
                subreddit: "tiny".into(),
                n_common: 2,
                spearman_rho: None,
                p_value: None,
            },
        ];
        write_evaluation(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("subreddit,n_common,spearman_rho,p_value\n"));
        assert!(text.contains("tiny,2,,\n"));
        assert_eq!(read_evaluation(&path).unwrap(), rows);
    }

    #[test]
    fn force_and_bias_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let forces = vec![ForceRow {
            user: "a,b".into(),
            subreddit: "s".into(),
            m_a: 1.25,
            d: 0.1 + 0.2,
            f_w: 1.0 / 3.0,
            predicted_rank: 1.5,
        }];
        let p = dir.path().join("f.csv");
        write_force_table(&p, &forces).unwrap();
        assert_eq!(read_force_table(&p).unwrap(), forces);

        let bias = vec![BiasRecord {
            user: "u".into(),
            subreddit: "s".into(),
            n: 3,
            pair_count: 3,
            m_unweighted: -0.123456789012345,
            m_a: 1.25 + 0.75 * -0.123456789012345,
            failures: 0,
        }];
        let p = dir.path().join("b.jsonl");
        write_bias_report(&p, &bias).unwrap();
        assert_eq!(read_bias_report(&p).unwrap(), bias);
    }

    #[test]
    fn diagnostics_are_tagged() {
        let d = Diagnostic::InsufficientData {
            subreddit: "s".into(),
            n_common: 1,
        };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"event":"insufficient_data","subreddit":"s","n_common":1}"#);
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Stream-level read failure; `line` is the last line read successfully.
    #[error("read failed after line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate comment id {0:?}")]
    DuplicateId(String),

    #[error("parent cycle among comments [{}]", .0.join(", "))]
    Cycle(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scoring failed: {message}")]
    Scoring {
        message: String,
        /// Raw model output, when the failure was an unparseable answer.
        raw: Option<String>,
        retryable: bool,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("{0}")]
    Report(String),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Scoring { retryable: true, .. })
    }
}

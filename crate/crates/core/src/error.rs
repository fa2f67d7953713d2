//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CpError {
    /// A parameter or argument is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested fit window is shorter than the minimum for the model dimension.
    #[error("range too short: window length {len} < minimum {min}")]
    RangeTooShort { len: usize, min: usize },

    /// Information matrix too ill-conditioned to invert at this split.
    #[error("degenerate information matrix at k={k} (condition estimate {cond:.3e})")]
    DegenerateInformation { k: usize, cond: f64 },

    /// Every candidate split was degenerate; no statistic can be reported.
    #[error("scan degenerate: no valid split in the trimmed range")]
    ScanDegenerate,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input file: {0}")]
    EmptyFile(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CpError>;

impl CpError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CpError::Domain(msg.into())
    }
}

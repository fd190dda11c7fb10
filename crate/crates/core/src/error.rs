use std::path::PathBuf;

/// Errors produced by the numerical core and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time {t} lies outside the history interval [{lo}, 0]")]
    OutOfDomain { t: f64, lo: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("step {step} does not divide {what} = {value}")]
    StepMismatch {
        step: f64,
        what: &'static str,
        value: f64,
    },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid history segment: {0}")]
    InvalidSegment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no boxes left after selection at depth {depth}")]
    EmptyCollection { depth: u32 },

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed {kind} file: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            kind,
            msg: msg.into(),
        }
    }

    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::LayoutMismatch(_)
            | Error::StepMismatch { .. }
            | Error::InvalidSegment(_)
            | Error::Format { .. } => 2,
            Error::EmptyCollection { .. } => 3,
            _ => 1,
        }
    }
}

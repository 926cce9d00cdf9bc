use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("duplicate paper id `{id}` on lines {first_line} and {line}")]
    DuplicatePaper { id: String, first_line: u64, line: u64 },

    #[error("unknown paper id `{0}`")]
    UnknownPaper(String),

    #[error("unknown author id `{0}`")]
    UnknownAuthor(String),

    #[error("gender lookup failed for candidate `{candidate}`: {msg}")]
    Provider { candidate: String, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("generation error: {0}")]
    Generation(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unbounded sample domain")]
    UnboundedDomain,

    #[error("feature set `{0}` requires function evaluations")]
    RequiresFunction(String),

    #[error("feature set `{0}` requires blocks (a cell grid)")]
    RequiresBlocks(String),

    #[error("unknown control key `{0}`")]
    UnknownControlKey(String),

    #[error("invalid value for control key `{key}`: {reason}")]
    InvalidControl { key: String, reason: String },

    #[error("unknown feature set `{0}`")]
    UnknownFeatureSet(String),

    #[error("unknown approach `{0}` (expected one of: min, mean, near)")]
    UnknownApproach(String),

    #[error("unknown problem `{name}`; available: {available}")]
    UnknownProblem { name: String, available: String },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

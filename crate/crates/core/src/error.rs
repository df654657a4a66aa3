use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("item index {index} out of range for catalog of {catalog_size} items")]
    ItemOutOfRange { index: usize, catalog_size: usize },

    #[error("prefix of length {len} exceeds positional table of {max_len}")]
    PrefixTooLong { len: usize, max_len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite gradient for parameter {name}")]
    NonFiniteGradient { name: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("gradient check failed: {0}")]
    GradCheck(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("case {case_id}: {source}")]
    Case {
        case_id: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Usage,
            Error::NonFiniteGradient { .. }
            | Error::NonFinite(_)
            | Error::GradCheck(_)
            | Error::Diverged { .. } => {
                ErrorClass::Numeric
            }
            Error::Case { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }
}

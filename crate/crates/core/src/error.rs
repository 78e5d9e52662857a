use std::path::PathBuf;

/// Errors raised by similarity evaluation, indexing and file handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input value lies outside the domain an operation is defined on
    /// (empty image, non-positive weight, zero-norm vector, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Arguments are individually valid but inconsistent with each other
    /// (dimension mismatch, match outcome that does not fit the images).
    #[error("contract error: {0}")]
    Contract(String),

    /// A caller-side precondition does not hold, e.g. PSMI on id-less words.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("word id {0} not found in index")]
    NotFound(u32),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("format error: {0}")]
    Format(String),

    /// The index was built over a different vocabulary.
    #[error("incompatible index: {0}")]
    Compatibility(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

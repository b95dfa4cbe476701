use std::io;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root/minimum bracket is invalid or does not bracket a sign change.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// An iteration failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Two sketches cannot be combined or compared.
    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    /// A request is well-formed but not supported for these parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Serialized sketch bytes are malformed.
    #[error("corrupt sketch data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

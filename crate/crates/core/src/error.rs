use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit-code contract: `Parameter` is a usage
/// problem, `Descriptor`/`Data`/`Io` are data problems, and `Internal` is an
/// invariant violation that should never happen on valid inputs.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed an argument that violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A dataset descriptor is inconsistent with itself or the files on disk.
    #[error("descriptor error: {0}")]
    Descriptor(String),

    /// Input data is malformed (size mismatch, incompatible table, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

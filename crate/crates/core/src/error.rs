use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("cannot decode {what}: {reason}")]
    Decode { what: String, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: u32,
        height: u32,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("lambda {0} is outside [0, 1]")]
    LambdaOutOfRange(f32),

    #[error("prompt {0:?} is not in the library")]
    UnknownPrompt(String),

    #[error("invalid prompt library: {0}")]
    InvalidPromptLibrary(String),

    #[error("network error talking to {endpoint} after {attempts} attempt(s): {message}")]
    Network {
        endpoint: String,
        attempts: u32,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("remote generator reported an error (HTTP {status}): {message}")]
    Remote { status: u16, message: String },

    #[error("no usable fractal images in {}", .0.display())]
    EmptyFractalSet(PathBuf),

    #[error("no images found under {}", .0.display())]
    EmptyDataset(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed manifest {} line {line}: {reason}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{source_path} (aug {aug_index}): {source}")]
    Augment {
        source_path: String,
        aug_index: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn decode(what: impl Into<String>, reason: impl ToString) -> Self {
        Error::Decode {
            what: what.into(),
            reason: reason.to_string(),
        }
    }

    /// Strips any `Augment` context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Augment { source, .. } => source.root(),
            other => other,
        }
    }
}

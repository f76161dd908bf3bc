use std::path::PathBuf;

/// Errors raised across mesh construction, assembly and solves.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("incompatible boundary data: {0}")]
    IncompatibleBc(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular system: {message} (null vector hint: {hint})")]
    SingularSystem { message: String, hint: String },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Prefixes the message with `context`, keeping the variant.
    pub fn with_context(self, context: &str) -> Self {
        let pre = |m: String| format!("{context}: {m}");
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(pre(m)),
            Error::InvalidMesh(m) => Error::InvalidMesh(pre(m)),
            Error::DegenerateMesh(m) => Error::DegenerateMesh(pre(m)),
            Error::IncompatibleBc(m) => Error::IncompatibleBc(pre(m)),
            Error::Unsupported(m) => Error::Unsupported(pre(m)),
            Error::NumericalFailure(m) => Error::NumericalFailure(pre(m)),
            Error::SingularSystem { message, hint } => Error::SingularSystem { message: pre(message), hint },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps these onto exit codes: validation and parse problems are
/// user-input errors, numeric failures are solver errors.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the range an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// An object violates one of its invariants (PSD, normalization, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative routine failed to converge.
    #[error("numeric error: {message} (residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },

    /// The request exceeds what the chosen method can handle.
    #[error("capability error: {0}")]
    Capability(String),

    /// Malformed input document.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            residual,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the library. Every variant names the module that
/// raised it so messages can be traced back without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the mathematical input was violated
    /// (reducible coding, non-monotone pressure, inadmissible word, ...).
    #[error("{module}: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    /// An enumeration or sampling budget would be exceeded.
    #[error("{module}: {message} (limit {limit})")]
    Resource {
        module: &'static str,
        message: String,
        limit: u128,
    },

    /// Floating point trouble: overflow, failed decomposition, no convergence.
    #[error("{module}: numeric failure: {message}")]
    Numeric {
        module: &'static str,
        message: String,
    },

    /// Malformed text documents or configuration.
    #[error("{module}: parse error: {message}")]
    Parse {
        module: &'static str,
        message: String,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn resource(module: &'static str, message: impl Into<String>, limit: u128) -> Self {
        Error::Resource {
            module,
            message: message.into(),
            limit,
        }
    }

    pub(crate) fn numeric(module: &'static str, message: impl Into<String>) -> Self {
        Error::Numeric {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn parse(module: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            module,
            message: message.into(),
        }
    }

    /// Process exit status used by the command line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 2,
            _ => 1,
        }
    }
}

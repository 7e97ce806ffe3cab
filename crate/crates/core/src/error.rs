//! Crate-wide error type.

/// Errors produced by samplers, closed-form evaluators and experiment drivers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A precondition on an input was violated. `name` identifies the
    /// offending parameter so CLI diagnostics can point at it.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// A truncated series or band sum did not reach the requested tolerance
    /// within the allowed range; the remainder estimate at the point of
    /// giving up is attached.
    #[error("series did not converge to tolerance {tol:e}; remainder estimate {remainder:e}")]
    NonConvergence { tol: f64, remainder: f64 },

    /// A statistic was requested over an empty batch.
    #[error("empty sample batch")]
    EmptyBatch,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by where in the pipeline the failure belongs so the
/// CLI can map them onto distinct exit codes: input/config problems,
/// infeasible plans, numerical failures, and failed certifications.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration input. `path` is the config
    /// field the message refers to (dotted key path).
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A validated domain invariant was violated.
    #[error("invalid `{path}`: {message}")]
    Invalid { path: String, message: String },

    /// The requested mapping cannot be realised on the given hardware.
    /// `constraint` names the binding quantity.
    #[error("infeasible: {constraint}: {message}")]
    Infeasible { constraint: String, message: String },

    /// Numerical failure during propagation or synthesis.
    #[error("numerical failure in {context}: {message}")]
    Numerics { context: String, message: String },

    /// A frame-equivalence certification exceeded its tolerance.
    #[error("certification failed: {message}")]
    CertificationFailed { message: String },

    /// A stochastic verification did not reproduce its target.
    #[error("verification failed: {message}")]
    VerificationFailed { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid { path: path.into(), message: message.into() }
    }

    pub fn infeasible(constraint: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Infeasible { constraint: constraint.into(), message: message.into() }
    }

    pub fn numerics(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numerics { context: context.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

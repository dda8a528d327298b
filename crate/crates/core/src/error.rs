//! Error type shared by all modules.
//!
//! Variants are grouped by how callers are expected to react, not by the
//! module that raised them: configuration mistakes, mathematical domain
//! violations, regime violations (the request is well-formed but the chosen
//! method is undefined there), insufficient distribution coverage, resource
//! caps, and internal consistency failures.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Construction or configuration input rejected.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The error threshold falls in a regime where the requested method does
    /// not apply (e.g. above the critical threshold, or a bounded/degenerate
    /// parameter regime).
    #[error("regime error: {0}")]
    Regime(String),

    /// A quantile or integral was requested beyond the mass covered by a
    /// truncated step distribution.
    #[error("insufficient coverage: requested mass {requested} exceeds covered mass {covered}")]
    Coverage { requested: f64, covered: f64 },

    /// A stream consumed more terms than the configured cap allows.
    #[error("resource cap: more than {cap} terms required; raise the term cap or relax the request")]
    ResourceCap { cap: u64 },

    /// Internal invariant broke (e.g. a finite spectrum exhausted before its
    /// own trace threshold was met, which can only happen through summation
    /// error).
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }
}

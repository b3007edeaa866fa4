use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants line up with the CLI exit-code contract: invariant
/// failures, configuration problems, domain errors and non-convergence are
/// kept apart so callers can react differently to each.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfsError {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An iterative or adaptive scheme ran out of budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A checked mathematical invariant failed (signals a bug or a
    /// numerically hopeless input).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, CfsError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CfsError {
    CfsError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {value}")))
    }
}

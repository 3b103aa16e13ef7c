//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, GscError>;

#[derive(Debug, Error)]
pub enum GscError {
    /// A value violates a documented domain invariant (non-positive sigma,
    /// degenerate rotation rows, non-finite input, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Inputs are structurally wrong for the operation (dimension mismatch,
    /// empty batch, wrong vector length, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An integration interval with t0 > t1.
    #[error("invalid interval: t0 = {t0} exceeds t1 = {t1}")]
    InvalidInterval { t0: f64, t1: f64 },

    /// An iterative optimization produced a non-finite loss.
    #[error("optimization diverged at iteration {iteration}: {reason}")]
    OptimizationFailure { iteration: usize, reason: String },

    /// A scene or image file violates its schema; `field` is the path of the
    /// offending entry (e.g. "body.parameters").
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    /// Malformed image data (PFM/PNG decode or encode failures).
    #[error("image error: {0}")]
    Image(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GscError {
    pub fn invalid_parameter(name: &str, reason: impl Into<String>) -> Self {
        GscError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub fn schema(field: &str, message: impl Into<String>) -> Self {
        GscError::Schema {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

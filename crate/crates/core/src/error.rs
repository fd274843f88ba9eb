//! Error types shared by all solver modules.

use thiserror::Error;

/// Errors raised by parameter validation and the solvers.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A named input parameter failed validation.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },

    /// An operation was called with an argument outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter combination sits on (or too close to) a removable
    /// singularity of the closed forms, e.g. `eta * (beta + 1) == rho`.
    #[error("singular parameter combination: {0}")]
    SingularParameters(String),

    /// A particular-solution denominator is too close to zero.
    #[error("resonant parameter combination: {0}")]
    Resonance(String),

    /// The characteristic-root search could not bracket a root.
    #[error("root search failed: {0}")]
    RootSearch(String),

    /// Config file could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation would need exponential work beyond the supported size.
    #[error("capability exceeded: {what} is {got}, supported maximum is {limit}")]
    Capability {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    /// A documented precondition of a checker does not hold for its input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An internal invariant failed; indicates a broken oracle or a bug.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("invalid tree description: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

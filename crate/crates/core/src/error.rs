use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its target accuracy.
    #[error("numeric error: {what} (estimate {estimate:e}, error {error:e}, evaluations {evaluations})")]
    Numeric {
        what: String,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Estimator input carries no usable signal (e.g. all-zero oscillations).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

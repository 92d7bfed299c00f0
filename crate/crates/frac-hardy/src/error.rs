use thiserror::Error;

/// Library-wide error type.
///
/// The CLI maps these onto process exit codes: domain/config/grid problems
/// exit 2, iteration failures exit 3 (check failures are not errors — a
/// `CheckReport` with `pass = false` exits 4 at the CLI layer).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid mathematical input: a pole, an out-of-range parameter, a
    /// violated precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed configuration or serialized data.
    #[error("config error: {0}")]
    Config(String),

    /// An iterative scheme failed to stabilize (root finding, panel
    /// refinement, the ascent loop).
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn non_convergence(msg: impl Into<String>) -> Self {
        Error::NonConvergence(msg.into())
    }
}

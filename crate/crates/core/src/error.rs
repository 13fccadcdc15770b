use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates one of its invariants.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Self-reinforcing shoe whose friction moment overwhelms the normal moment.
    #[error("self-locking shoe: friction moment {friction_moment:.6e} >= normal moment {normal_moment:.6e} per unit pressure (mu = {mu})")]
    SelfLocking {
        mu: f64,
        normal_moment: f64,
        friction_moment: f64,
    },

    #[error("integration failure at t = {time} s: {reason}")]
    Integration { time: f64, reason: String },

    #[error("grid point (shoe_mass = {shoe_mass}, preload = {preload}): {source}")]
    GridPoint {
        shoe_mass: f64,
        preload: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

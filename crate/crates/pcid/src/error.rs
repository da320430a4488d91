use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An input violates an operation contract (e.g. asymmetric matrix
    /// passed to a symmetric-only kernel, reset anchor in the past).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A query outside the defined domain (e.g. time before the first
    /// schedule segment).
    #[error("domain error: {0}")]
    Domain(String),

    /// A state variable became non-finite at simulation time `t`.
    #[error("divergence in {component} at t = {t}")]
    Divergence { component: String, t: f64 },

    /// Configuration rejected; every violation is listed, not only the first.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain value failed validation (bad geometry, position, prior, grid).
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },

    /// Source at endfire (|theta| = pi/2); distance and angle are not estimable there.
    #[error("singular geometry: {0}")]
    Singular(String),

    /// Operation only defined on a restricted domain (e.g. broadside-only asymptotics).
    #[error("outside domain: {0}")]
    Domain(String),

    /// Numerically singular Fisher matrix.
    #[error("ill-conditioned Fisher information: {0}")]
    Conditioning(String),

    /// Adaptive or grid-doubling quadrature did not reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("scenario config: {0}")]
    Config(String),

    #[error("curve is missing series `{0}`")]
    MissingSeries(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

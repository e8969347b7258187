use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    Material(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("element {element} has non-positive Jacobian {det:e}")]
    Jacobian { element: usize, det: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("linear solver breakdown: {0}")]
    Breakdown(String),

    #[error("picard step {iteration} failed: {source}")]
    Picard {
        iteration: usize,
        #[source]
        source: Box<Error>,
        /// Residual norms of the iterations completed before the failure.
        history: Vec<f64>,
    },

    #[error("manufactured solution rejected: {0}")]
    Manufactured(String),

    #[error("convergence study: {0}")]
    Study(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

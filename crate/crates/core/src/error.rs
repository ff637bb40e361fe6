use thiserror::Error;

/// Errors raised by the spline, geometry, solver and estimator layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("non-finite integrand value at quadrature node {node:?}")]
    NonFinite { node: Vec<f64> },

    #[error("index set is not downward closed: {index} lacks predecessor {missing}")]
    NotDownwardClosed { index: String, missing: String },

    #[error("evaluation failed at alpha={alpha:?}, beta={beta:?}, y={node:?}: {source}")]
    Estimator {
        alpha: Vec<u32>,
        beta: Vec<u32>,
        node: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

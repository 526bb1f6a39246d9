use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("node index {index} out of range for graph with {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },

    #[error("graph {0} would be left without nodes; request whole-graph removal instead")]
    DegenerateGraph(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("labels must be -1 or +1, found {0}")]
    Label(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("power cache error: {0}")]
    Cache(String),

    #[error("{0} filters are not polynomial in the shift operator; use the from-scratch embedding")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("optimizer stopped at gradient norm {grad_norm:e} after {iterations} iterations")]
    NotConverged { grad_norm: f64, iterations: usize },

    #[error("stale request: {0}")]
    StaleRequest(String),

    #[error("request does not match its arguments: {0}")]
    RequestMismatch(String),

    #[error("batch of {m} node edits needs m < min graph size {min_nodes}; remove whole graphs first")]
    BatchTooLarge { m: usize, min_nodes: usize },

    #[error("bound dominance violated: {0}")]
    DominanceViolation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

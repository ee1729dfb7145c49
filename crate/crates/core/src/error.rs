use thiserror::Error;

use crate::graph::VertexId;

/// Errors raised by graph construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The graph violates a structural invariant (isolated vertex, bad weight, ...).
    #[error("construction defect: {0}")]
    Construction(String),

    /// A vertex cannot be reached, or a linear system is singular because the
    /// graph falls apart.
    #[error("connectivity defect: {0}")]
    Connectivity(String),

    #[error("vertex {0} is not in the graph")]
    UnknownVertex(VertexId),

    /// An IFS or carpet generator fails one of its admissibility conditions.
    #[error("generator defect: {0}")]
    Generator(String),

    #[error("malformed excursion: {0}")]
    MalformedExcursion(String),

    #[error("not tree-like: {0}")]
    NotTreeLike(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A problem exceeds the size the direct solvers accept.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iteration failed to converge; carries the last residuals seen.
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    /// A quantitative inequality or identity failed beyond tolerance.
    #[error("{check} violated at {location}: lhs {lhs:e} > rhs {rhs:e}")]
    Violation {
        check: String,
        location: String,
        lhs: f64,
        rhs: f64,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop at node {node} (line {line})")]
    SelfLoop { node: usize, line: usize },

    #[error("duplicate edge {a}-{b} (line {line})")]
    DuplicateEdge { a: usize, b: usize, line: usize },

    #[error("no connected graph found after {attempts} samples")]
    NotConnected { attempts: usize },

    #[error("absorbing configuration reached before any event (all rates are zero)")]
    Absorbing,

    #[error("trajectory does not match graph: {0}")]
    Mismatch(String),

    #[error("no holding class has an observed departure")]
    NoRetainedClasses,

    #[error("underdetermined system: rank {rank} < {b}, deficient columns {columns:?}")]
    Underdetermined {
        rank: usize,
        b: usize,
        columns: Vec<usize>,
    },

    #[error("iteration budget of {0} exceeded")]
    IterationBudget(usize),

    #[error("delta unrecoverable: {0}")]
    DeltaUnrecoverable(String),

    #[error("enumeration over {n} nodes exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerical stages rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoRetainedClasses
                | Error::Underdetermined { .. }
                | Error::IterationBudget(_)
                | Error::DeltaUnrecoverable(_)
                | Error::Absorbing
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

use crate::graph::Vertex;

/// Errors raised while building or reading graphs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: Vertex },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: Vertex, v: Vertex },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Which per-round limit a machine exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cap {
    Space,
    Sent,
    Received,
}

impl std::fmt::Display for Cap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Cap::Space => "space",
            Cap::Sent => "sent-traffic",
            Cap::Received => "received-traffic",
        })
    }
}

/// A violation of the simulated model. Faults are fatal for the run that raised them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimFault {
    #[error("round {round}: machine {machine} exceeded its {cap} cap ({words} > {limit} words)")]
    Overflow {
        round: u64,
        machine: usize,
        cap: Cap,
        words: usize,
        limit: usize,
    },
    #[error("input of {needed} words does not fit {machines} machines of {space} words")]
    Capacity {
        needed: usize,
        machines: usize,
        space: usize,
    },
    #[error("ball around vertex {center} needs {words} words, budget is {budget}")]
    BallOverflow {
        center: Vertex,
        words: usize,
        budget: usize,
    },
    #[error("rule violation: {0}")]
    Rule(String),
    #[error("component of {words} words does not fit a machine after {iterations} iterations")]
    Shattering { words: usize, iterations: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimFault),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

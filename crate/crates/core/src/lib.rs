//! Simulation of low-memory massively parallel computation, hosting
//! maximal independent set and maximal matching on sparse graphs.

pub mod error;
pub mod graph;
pub mod harness;
pub mod hash;
pub mod local;
pub mod primitives;
pub mod runtime;
pub mod symbreak;

pub use error::{Cap, Error, GraphError, Result, SimFault};
pub use graph::{Edge, Graph, HopBall, Vertex};
pub use runtime::{Cluster, ClusterConfig, Outbox, RoundMeter, Word, Words};

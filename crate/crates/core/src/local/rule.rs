use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Graph, Vertex};
use crate::runtime::Word;

/// A state-congested LOCAL algorithm: one word of state per vertex and per
/// edge, updated synchronously from the previous round's states.
///
/// Transitions must be pure. Rounds are numbered from 1; a rule may branch on
/// the round to encode multi-step cycles.
pub trait LocalRule: Sync {
    /// `incident` holds `(neighbor, edge state)` sorted by neighbor.
    fn vertex(&self, v: Vertex, state: Word, incident: &[(Vertex, Word)], tape: TapeView, round: u64) -> Word;

    /// Called with `u < v`.
    fn edge(&self, u: Vertex, su: Word, v: Vertex, sv: Word, se: Word, round: u64) -> Word;
}

/// Initial edge state: both endpoint IDs packed into one word.
#[inline]
pub fn pack_edge(u: Vertex, v: Vertex) -> Word {
    ((u as Word) << 32) | v as Word
}

/// Per-vertex random tapes derived from one global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTape {
    pub seed: u64,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        RandomTape { seed }
    }

    pub fn view(self, v: Vertex) -> TapeView {
        TapeView { tape: self, v }
    }

    /// Word `idx` of the tape of `v`; identical wherever it is regenerated.
    #[inline]
    pub fn word(self, v: Vertex, idx: u64) -> Word {
        crate::hash::mix3(self.seed, v as u64, idx)
    }
}

/// The tape of a single vertex.
#[derive(Debug, Clone, Copy)]
pub struct TapeView {
    tape: RandomTape,
    v: Vertex,
}

impl TapeView {
    #[inline]
    pub fn word(self, idx: u64) -> Word {
        self.tape.word(self.v, idx)
    }
}

/// All vertex and edge states after `round` rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVector {
    pub round: u64,
    pub vertex: Vec<Word>,
    /// Sorted canonical edges; `edge[i]` is the state of `edges[i]`.
    pub edges: Vec<Edge>,
    pub edge: Vec<Word>,
}

impl StateVector {
    pub fn initial(n: usize, edges: Vec<Edge>) -> Self {
        StateVector {
            round: 0,
            vertex: (0..n as Word).collect(),
            edge: edges.iter().map(|&(u, v)| pack_edge(u, v)).collect(),
            edges,
        }
    }

    pub fn of_graph(g: &Graph) -> Self {
        Self::initial(g.n(), g.edges().to_vec())
    }

    pub fn edge_state(&self, e: Edge) -> Option<Word> {
        self.edges.binary_search(&e).ok().map(|i| self.edge[i])
    }
}

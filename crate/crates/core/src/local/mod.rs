//! State-congested LOCAL algorithms: the rule interface, direct simulation,
//! local replay and compressed execution.

pub mod blind;
pub mod centered;
pub mod direct;
pub mod replay;
pub mod rule;

pub use blind::{blind_coordinate, compression_radius, BlindSession};
pub use centered::CenterSession;
pub use direct::{simulate_direct, DirectSession};
pub use replay::{local_replay, run_sequential};
pub use rule::{pack_edge, LocalRule, RandomTape, StateVector, TapeView};

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::graph::{Graph, Vertex};
    use crate::hash::mix3;
    use crate::runtime::Word;

    /// Mixes every input into the next state, so any wrong input shows up.
    pub struct HashRule;

    impl LocalRule for HashRule {
        fn vertex(&self, v: Vertex, state: Word, incident: &[(Vertex, Word)], tape: TapeView, round: u64) -> Word {
            let mut acc = mix3(state, v as Word, tape.word(round));
            for &(u, s) in incident {
                acc = mix3(acc, u as Word, s);
            }
            acc
        }

        fn edge(&self, u: Vertex, su: Word, v: Vertex, sv: Word, se: Word, round: u64) -> Word {
            mix3(mix3(su, sv, se), (u as Word) << 32 | v as Word, round)
        }
    }

    /// Leaves every state as it is.
    pub struct Frozen;

    impl LocalRule for Frozen {
        fn vertex(&self, _: Vertex, state: Word, _: &[(Vertex, Word)], _: TapeView, _: u64) -> Word {
            state
        }

        fn edge(&self, _: Vertex, _: Word, _: Vertex, _: Word, se: Word, _: u64) -> Word {
            se
        }
    }

    /// Naive whole-graph simulator written against `Graph` adjacency only.
    pub fn naive<R: LocalRule>(g: &Graph, rule: &R, tape: RandomTape, r: u64) -> StateVector {
        let mut s = StateVector::of_graph(g);
        for round in 1..=r {
            let es = |a: Vertex, b: Vertex| s.edge_state(crate::graph::canonical(a, b)).unwrap();
            let vertex: Vec<Word> = g
                .vertices()
                .map(|v| {
                    let inc: Vec<(Vertex, Word)> = g.neighbors(v).iter().map(|&u| (u, es(u, v))).collect();
                    rule.vertex(v, s.vertex[v as usize], &inc, tape.view(v), round)
                })
                .collect();
            let edge: Vec<Word> = s
                .edges
                .iter()
                .zip(&s.edge)
                .map(|(&(a, b), &se)| rule.edge(a, s.vertex[a as usize], b, s.vertex[b as usize], se, round))
                .collect();
            s.vertex = vertex;
            s.edge = edge;
            s.round = round;
        }
        s
    }
}

//! Luby's algorithm as a five-round state-congested cycle.
//!
//! Vertex state: status in the top two bits, a 62-bit random number below.
//! Random numbers compare with the vertex ID as tie-break.

use crate::graph::Vertex;
use crate::local::{LocalRule, StateVector, TapeView};
use crate::runtime::Word;

pub const CYCLE: u64 = 5;

const STATUS_SHIFT: u32 = 62;
const PAYLOAD: Word = (1 << STATUS_SHIFT) - 1;
const ALIVE: Word = 0;
const IN_MIS: Word = 1;
const REMOVED: Word = 2;

const DEAD: Word = 0;
const LIVE: Word = 1;
const MIN_U: Word = 2;
const MIN_V: Word = 3;
const HIT: Word = 4;

#[inline]
fn status(s: Word) -> Word {
    s >> STATUS_SHIFT
}

/// One Luby iteration per cycle: draw, compare, join, mark, remove.
#[derive(Debug, Clone, Copy, Default)]
pub struct LubyRule;

pub fn luby_rule() -> LubyRule {
    LubyRule
}

impl LocalRule for LubyRule {
    fn vertex(&self, v: Vertex, state: Word, incident: &[(Vertex, Word)], tape: TapeView, round: u64) -> Word {
        if status(state) != ALIVE {
            return state;
        }
        match (round - 1) % CYCLE {
            0 => tape.word((round - 1) / CYCLE) >> 2,
            2 => {
                let wins = incident.iter().all(|&(w, e)| match e {
                    MIN_U => v < w,
                    MIN_V => v > w,
                    _ => true,
                });
                if wins {
                    IN_MIS << STATUS_SHIFT
                } else {
                    state
                }
            }
            4 if incident.iter().any(|&(_, e)| e == HIT) => REMOVED << STATUS_SHIFT,
            _ => state,
        }
    }

    fn edge(&self, u: Vertex, su: Word, v: Vertex, sv: Word, se: Word, round: u64) -> Word {
        match (round - 1) % CYCLE {
            0 => {
                if status(su) == ALIVE && status(sv) == ALIVE {
                    LIVE
                } else {
                    DEAD
                }
            }
            1 if se == LIVE => {
                if (su & PAYLOAD, u) < (sv & PAYLOAD, v) {
                    MIN_U
                } else {
                    MIN_V
                }
            }
            3 if se != DEAD && (status(su) == IN_MIS || status(sv) == IN_MIS) => HIT,
            _ => se,
        }
    }
}

/// Vertices whose state is "in the independent set".
pub fn decode_mis(states: &StateVector) -> Vec<Vertex> {
    (0..states.vertex.len() as Vertex)
        .filter(|&v| status(states.vertex[v as usize]) == IN_MIS)
        .collect()
}

/// Vertices that left the graph, by joining or by losing to a neighbor.
pub fn decided(states: &StateVector) -> Vec<bool> {
    states.vertex.iter().map(|&s| status(s) != ALIVE).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::harness::check_mis;
    use crate::local::{run_sequential, RandomTape};

    fn run(g: &Graph, seed: u64, cycles: u64) -> StateVector {
        let mut s = StateVector::of_graph(g);
        run_sequential(&LubyRule, RandomTape::new(seed), &mut s, cycles * CYCLE);
        s
    }

    #[test]
    fn single_vertex_joins() {
        let s = run(&Graph::empty(1), 3, 1);
        assert_eq!(decode_mis(&s), vec![0]);
    }

    #[test]
    fn triangle_one_winner() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        for seed in 0..20 {
            let s = run(&g, seed, 1);
            assert_eq!(decode_mis(&s).len(), 1);
            assert!(decided(&s).iter().all(|&d| d));
        }
    }

    #[test]
    fn path_of_three_over_seeds() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        for seed in 0..10 {
            let s = run(&g, seed, 3);
            assert!(check_mis(&g, &decode_mis(&s)).valid, "seed {seed}");
        }
    }

    #[test]
    fn forest_union_to_fixpoint() {
        let g = generate(Family::ForestUnion { n: 400, alpha: 3 }, 2).unwrap();
        let s = run(&g, 9, 40);
        assert!(check_mis(&g, &decode_mis(&s)).valid);
    }
}

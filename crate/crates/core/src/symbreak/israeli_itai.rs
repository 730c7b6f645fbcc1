//! Randomized maximal matching as a five-round state-congested cycle.
//!
//! Each alive vertex flips a coin. Senders pick a uniform live neighbor,
//! receivers accept the lowest-ID sender that picked them, and accepted
//! pairs are matched. Senders learn their match at the start of the next cycle.

use crate::graph::{Edge, Vertex};
use crate::local::{LocalRule, StateVector, TapeView};
use crate::runtime::Word;

pub const CYCLE: u64 = 5;

const STATUS_SHIFT: u32 = 62;
const ROLE_SHIFT: u32 = 60;
const PAYLOAD: Word = (1 << 32) - 1;
const ALIVE: Word = 0;
const MATCHED: Word = 1;
const SENDER: Word = 1;
const RECEIVER: Word = 2;

// Tagged so no initial edge state `pack_edge(u, v)` reads as a match.
const TAG: Word = 1 << 63;
const DEAD: Word = TAG;
const LIVE: Word = TAG | 1;
const PROPOSED: Word = TAG | 2;
const MATCH: Word = TAG | 3;

#[inline]
fn status(s: Word) -> Word {
    s >> STATUS_SHIFT
}

#[inline]
fn role(s: Word) -> Word {
    (s >> ROLE_SHIFT) & 3
}

#[inline]
fn matched_to(partner: Vertex) -> Word {
    MATCHED << STATUS_SHIFT | partner as Word
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IsraeliItaiRule;

pub fn israeli_itai_rule() -> IsraeliItaiRule {
    IsraeliItaiRule
}

impl LocalRule for IsraeliItaiRule {
    fn vertex(&self, _v: Vertex, state: Word, incident: &[(Vertex, Word)], tape: TapeView, round: u64) -> Word {
        if status(state) != ALIVE {
            return state;
        }
        match (round - 1) % CYCLE {
            0 => match incident.iter().find(|&&(_, e)| e == MATCH) {
                Some(&(w, _)) => matched_to(w),
                None => 0,
            },
            1 => {
                let coin = tape.word((round - 1) / CYCLE);
                if coin & 1 == 0 {
                    return RECEIVER << ROLE_SHIFT;
                }
                let live = incident.iter().filter(|&&(_, e)| e == LIVE).count() as u64;
                if live == 0 {
                    return 0;
                }
                let k = ((coin >> 1) % live) as usize;
                let (w, _) = *incident.iter().filter(|&&(_, e)| e == LIVE).nth(k).expect("k < live");
                SENDER << ROLE_SHIFT | w as Word
            }
            3 if role(state) == RECEIVER => match incident.iter().find(|&&(_, e)| e == PROPOSED) {
                Some(&(w, _)) => matched_to(w),
                None => state,
            },
            _ => state,
        }
    }

    fn edge(&self, u: Vertex, su: Word, v: Vertex, sv: Word, se: Word, round: u64) -> Word {
        let alive = status(su) == ALIVE && status(sv) == ALIVE;
        match (round - 1) % CYCLE {
            0 if se != MATCH => {
                if alive {
                    LIVE
                } else {
                    DEAD
                }
            }
            1 if se == LIVE && !alive => DEAD,
            2 if se == LIVE && alive => {
                let offers = |s: Word, r: Word, to: Vertex| {
                    role(s) == SENDER && s & PAYLOAD == to as Word && role(r) == RECEIVER
                };
                if offers(su, sv, v) || offers(sv, su, u) {
                    PROPOSED
                } else {
                    LIVE
                }
            }
            4 if se == PROPOSED => {
                if su == matched_to(v) || sv == matched_to(u) {
                    MATCH
                } else {
                    LIVE
                }
            }
            _ => se,
        }
    }
}

/// Edges whose state is "matched".
pub fn decode_matching(states: &StateVector) -> Vec<Edge> {
    states
        .edges
        .iter()
        .zip(&states.edge)
        .filter(|&(_, &s)| s == MATCH)
        .map(|(&e, _)| e)
        .collect()
}

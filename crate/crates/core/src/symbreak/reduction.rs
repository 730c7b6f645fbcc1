//! One degree-reduction call, both as a 14-round state-congested rule and as
//! a sequence of neighborhood aggregations. The two produce identical outcomes.
//!
//! Vertex state: status in bits 62..63, flags in bits 56..59, payload in
//! bits 0..47 (a neighbor-ID threshold, a 40-bit random number, or a vertex).
//! Edge state: the flag set below, cleared at the start of every call.

use crate::error::SimFault;
use crate::graph::{canonical, Edge, Vertex};
use crate::hash::mix64;
use crate::local::{LocalRule, RandomTape, StateVector, TapeView};
use crate::primitives::aggregate::{compute_degrees, exchange, filter_edges, smallest_neighbors, EdgeOutcome};
use crate::primitives::tree::{EdgeTree, Layout};
use crate::runtime::{Cluster, Outbox, Word};
use crate::symbreak::params::{Mode, Thresholds};

pub const ROUNDS_PER_CALL: u64 = 14;

/// Vertex IDs must fit below the random bits of a comparison key.
pub const MAX_VERTICES: usize = 1 << 24;

const STATUS_SHIFT: u32 = 62;
const ALIVE: Word = 0;
const IN_MIS: Word = 1;
const REMOVED: Word = 2;
const MATCHED: Word = 3;
const HIGH: Word = 1 << 56;
const EXPOSED: Word = 1 << 57;
const LEAF: Word = 1 << 58;
const GOOD: Word = 1 << 59;
const PAYLOAD: Word = (1 << 48) - 1;

const LIVE: Word = 1;
const HU: Word = 1 << 1;
const HV: Word = 1 << 2;
const KEPT: Word = 1 << 5;
const LL: Word = 1 << 6;
const GG: Word = 1 << 7;
const MIN_U: Word = 1 << 8;
const PROP: Word = 1 << 9;
const MATCH: Word = 1 << 10;
const HIT: Word = 1 << 11;

const ID_BITS: u32 = 24;
const ID_MASK: Word = (1 << ID_BITS) - 1;

#[inline]
fn status(s: Word) -> Word {
    s >> STATUS_SHIFT
}

#[inline]
fn with_status(st: Word, payload: Word) -> Word {
    st << STATUS_SHIFT | payload
}

/// 40-bit random number of a good leaf in the independent-set variant.
#[inline]
fn draw(word: Word) -> Word {
    word >> ID_BITS
}

/// Priority of neighbor `x` in a leaf's uniform proposal; the minimum wins.
#[inline]
fn proposal_key(word: Word, x: Vertex) -> Word {
    (mix64(word ^ x as Word) & !ID_MASK) | x as Word
}

/// Flag of the endpoint opposite to `v` on an edge to `w`.
#[inline]
fn other(v: Vertex, w: Vertex, e: Word, if_u: Word, if_v: Word) -> bool {
    e & if w < v { if_u } else { if_v } != 0
}

/// Algorithm-1 call as a LOCAL rule; call `k` occupies rounds `14k + 1 ..= 14k + 14`.
#[derive(Debug, Clone, Copy)]
pub struct DegreeReductionRule {
    pub th: Thresholds,
    pub mode: Mode,
}

impl DegreeReductionRule {
    pub fn new(th: Thresholds, mode: Mode) -> Self {
        DegreeReductionRule { th, mode }
    }
}

impl LocalRule for DegreeReductionRule {
    fn vertex(&self, v: Vertex, s: Word, inc: &[(Vertex, Word)], tape: TapeView, round: u64) -> Word {
        if status(s) != ALIVE {
            return s;
        }
        let call = (round - 1) / ROUNDS_PER_CALL;
        let low_live = |&&(w, e): &&(Vertex, Word)| e & LIVE != 0 && !other(v, w, e, HU, HV);
        match (round - 1) % ROUNDS_PER_CALL {
            1 => {
                let deg = inc.iter().filter(|&&(_, e)| e & LIVE != 0).count();
                if deg >= self.th.high as usize {
                    HIGH
                } else {
                    0
                }
            }
            3 if s & HIGH != 0 => {
                if inc.iter().filter(low_live).count() >= self.th.leaf_pick as usize {
                    s | EXPOSED
                } else {
                    s
                }
            }
            // Replays near a neighborhood boundary see partial inputs; their
            // outputs are discarded, so such steps only need to be total.
            5 if s & EXPOSED != 0 => match inc.iter().filter(low_live).nth(self.th.leaf_pick as usize - 1) {
                Some(&(w, _)) => s | w as Word,
                None => s,
            },
            7 if s & HIGH == 0 && inc.iter().any(|&(_, e)| e & KEPT != 0) => s | LEAF,
            9 if s & LEAF != 0 => {
                let exposed = inc.iter().filter(|&&(_, e)| e & KEPT != 0).count() as u64;
                let leaves = inc.iter().filter(|&&(_, e)| e & LL != 0).count() as u64;
                if !self.th.good(exposed, leaves) {
                    return s;
                }
                let word = tape.word(call);
                match self.mode {
                    Mode::Mis => s | GOOD | draw(word),
                    Mode::Mm => {
                        let key = inc
                            .iter()
                            .filter(|&&(_, e)| e & KEPT != 0)
                            .map(|&(w, _)| proposal_key(word, w))
                            .min();
                        key.map_or(s, |k| s | GOOD | (k & ID_MASK))
                    }
                }
            }
            11 => match self.mode {
                Mode::Mis if s & GOOD != 0 => {
                    let wins = inc
                        .iter()
                        .filter(|&&(_, e)| e & GG != 0)
                        .all(|&(w, e)| (e & MIN_U != 0) == (v < w));
                    if wins {
                        with_status(IN_MIS, 0)
                    } else {
                        s
                    }
                }
                Mode::Mm if s & EXPOSED != 0 => match inc.iter().find(|&&(_, e)| e & PROP != 0) {
                    Some(&(w, _)) => with_status(MATCHED, w as Word),
                    None => s,
                },
                _ => s,
            },
            13 => match self.mode {
                Mode::Mis if inc.iter().any(|&(_, e)| e & HIT != 0) => with_status(REMOVED, 0),
                Mode::Mm => match inc.iter().find(|&&(_, e)| e & MATCH != 0) {
                    Some(&(w, _)) => with_status(MATCHED, w as Word),
                    None => s,
                },
                _ => s,
            },
            _ => s,
        }
    }

    fn edge(&self, u: Vertex, su: Word, v: Vertex, sv: Word, se: Word, round: u64) -> Word {
        let phase = (round - 1) % ROUNDS_PER_CALL;
        if phase == 0 {
            return if status(su) == ALIVE && status(sv) == ALIVE { LIVE } else { 0 };
        }
        if se & LIVE == 0 {
            return se;
        }
        let flag = |cond: bool, f: Word| if cond { f } else { 0 };
        match phase {
            2 => se | flag(su & HIGH != 0, HU) | flag(sv & HIGH != 0, HV),
            6 => {
                let keeps = |sx: Word, sy: Word, y: Vertex| sx & EXPOSED != 0 && sy & HIGH == 0 && y as Word <= sx & PAYLOAD;
                se | flag(keeps(su, sv, v) || keeps(sv, su, u), KEPT)
            }
            8 => se | flag(su & sv & LEAF != 0, LL),
            10 => match self.mode {
                Mode::Mis if se & LL != 0 && su & sv & GOOD != 0 => {
                    se | GG | flag((su & PAYLOAD, u) < (sv & PAYLOAD, v), MIN_U)
                }
                Mode::Mm if se & KEPT != 0 => {
                    let offers = |sx: Word, to: Vertex| sx & GOOD != 0 && sx & PAYLOAD == to as Word;
                    se | flag(offers(su, v) || offers(sv, u), PROP)
                }
                _ => se,
            },
            12 => match self.mode {
                Mode::Mis => se | flag(status(su) == IN_MIS || status(sv) == IN_MIS, HIT),
                Mode::Mm if se & PROP != 0 => {
                    let accepted = su == with_status(MATCHED, v as Word) || sv == with_status(MATCHED, u as Word);
                    se | flag(accepted, MATCH)
                }
                _ => se,
            },
            _ => se,
        }
    }
}

/// What a run of calls decided.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallOutcome {
    /// Vertices that joined the independent set.
    pub joined: Vec<Vertex>,
    /// Neighbors of joined vertices.
    pub removed: Vec<Vertex>,
    pub matched: Vec<Edge>,
}

impl CallOutcome {
    pub fn is_empty(&self) -> bool {
        self.joined.is_empty() && self.removed.is_empty() && self.matched.is_empty()
    }

    /// Every vertex that left the graph.
    pub fn gone(&self, n: usize) -> Vec<bool> {
        let mut gone = vec![false; n];
        let ends = self.matched.iter().flat_map(|&(a, b)| [a, b]);
        for v in self.joined.iter().chain(&self.removed).copied().chain(ends) {
            gone[v as usize] = true;
        }
        gone
    }

    pub fn absorb(&mut self, other: CallOutcome) {
        self.joined.extend(other.joined);
        self.removed.extend(other.removed);
        self.matched.extend(other.matched);
        self.joined.sort_unstable();
        self.removed.sort_unstable();
        self.matched.sort_unstable();
    }
}

/// Decisions recorded in rule states.
pub fn decode_calls(states: &StateVector) -> CallOutcome {
    let mut out = CallOutcome::default();
    for (v, &s) in states.vertex.iter().enumerate() {
        let v = v as Vertex;
        match status(s) {
            IN_MIS => out.joined.push(v),
            REMOVED => out.removed.push(v),
            MATCHED => {
                let w = (s & PAYLOAD) as Vertex;
                if v < w {
                    out.matched.push(canonical(v, w));
                }
            }
            _ => {}
        }
    }
    out
}

/// Degree-reduction call `call` over the cluster's current edges through
/// neighborhood aggregation; edges of vertices that leave are dropped.
pub fn degree_reduction_step(
    cluster: &mut Cluster,
    th: &Thresholds,
    mode: Mode,
    tape: RandomTape,
    call: u64,
) -> Result<CallOutcome, SimFault> {
    let n = cluster.config().n;
    if n > MAX_VERTICES {
        return Err(SimFault::Argument(format!("{n} vertices exceed {MAX_VERTICES}")));
    }
    let deg = compute_degrees(cluster)?;
    let high: Vec<bool> = deg.iter().map(|&d| d >= th.high).collect();
    let tree = EdgeTree::build(cluster)?;
    let one = Layout::for_payload(cluster, 1);
    let two = Layout::for_payload(cluster, 2);
    let sum = |a: &mut Word, b: Word| *a += b;

    // Exposed: high with at least `leaf_pick` low neighbors.
    let hv: Vec<Word> = high.iter().map(|&h| Word::from(h)).collect();
    let low = exchange(
        cluster,
        &tree,
        &hv,
        one,
        |_, xu, _, xv| EdgeOutcome::keep(Some(1 - xv), Some(1 - xu)),
        sum,
    )?;
    let exposed: Vec<bool> = (0..n)
        .map(|v| high[v] && low[v].unwrap_or(0) >= Word::from(th.leaf_pick))
        .collect();

    // Kept edges: the `leaf_pick` lowest-ID low neighbors of each exposed vertex.
    const H: Word = 1 << 32;
    const X: Word = 1 << 33;
    let flags: Vec<Word> = (0..n).map(|v| hv[v] * H | Word::from(exposed[v]) * X).collect();
    let picks = smallest_neighbors(cluster, &tree, &flags, th.leaf_pick as usize, |_, xv, _, xu| {
        xv & X != 0 && xu & H == 0
    })?;
    let packed: Vec<Word> = (0..n)
        .map(|v| flags[v] | if exposed[v] { *picks[v].last().expect("exposed") as Word } else { 0 })
        .collect();
    let keeps = |x: Word, y: Vertex, xy: Word| x & X != 0 && xy & H == 0 && y as Word <= x & ID_MASK;
    let kept = exchange(
        cluster,
        &tree,
        &packed,
        two,
        |u, xu, v, xv| {
            EdgeOutcome::keep(
                keeps(xv, u, xu).then(|| (1, proposal_key(tape.word(u, call), v))),
                keeps(xu, v, xv).then(|| (1, proposal_key(tape.word(v, call), u))),
            )
        },
        |a: &mut (Word, Word), b| {
            a.0 += b.0;
            a.1 = a.1.min(b.1);
        },
    )?;
    let leaf: Vec<bool> = (0..n).map(|v| !high[v] && kept[v].is_some()).collect();

    // Good leaves: few exposed neighbors and few leaf neighbors.
    let lv: Vec<Word> = leaf.iter().map(|&l| Word::from(l)).collect();
    let leaves = exchange(
        cluster,
        &tree,
        &lv,
        one,
        |_, xu, _, xv| {
            let both = (xu & xv == 1).then_some(1);
            EdgeOutcome::keep(both, both)
        },
        sum,
    )?;
    let good: Vec<bool> = (0..n)
        .map(|v| leaf[v] && th.good(kept[v].map_or(0, |k| k.0), leaves[v].unwrap_or(0)))
        .collect();

    let mut out = CallOutcome::default();
    match mode {
        Mode::Mis => {
            let key: Vec<Word> = (0..n)
                .map(|v| if good[v] { draw(tape.word(v as Vertex, call)) << ID_BITS | v as Word } else { Word::MAX })
                .collect();
            let rival = exchange(
                cluster,
                &tree,
                &key,
                one,
                |_, ku, _, kv| {
                    let both = ku != Word::MAX && kv != Word::MAX;
                    EdgeOutcome::keep(both.then_some(kv), both.then_some(ku))
                },
                |a: &mut Word, b| *a = (*a).min(b),
            )?;
            let joined: Vec<bool> = (0..n).map(|v| good[v] && key[v] < rival[v].unwrap_or(Word::MAX)).collect();
            let jv: Vec<Word> = joined.iter().map(|&j| Word::from(j)).collect();
            let hit = exchange(
                cluster,
                &tree,
                &jv,
                one,
                |_, xu, _, xv| EdgeOutcome::keep((xv == 1).then_some(1), (xu == 1).then_some(1)),
                |a: &mut Word, b| *a |= b,
            )?;
            for v in 0..n {
                if joined[v] {
                    out.joined.push(v as Vertex);
                } else if hit[v].is_some() {
                    out.removed.push(v as Vertex);
                }
            }
        }
        Mode::Mm => {
            // Proposals travel along kept edges; targets are stored plus one so zero means none.
            let target: Vec<Word> = (0..n)
                .map(|v| if good[v] { (kept[v].expect("leaf").1 & ID_MASK) + 1 } else { 0 })
                .collect();
            let accept = exchange(
                cluster,
                &tree,
                &target,
                one,
                |u, tu, v, tv| {
                    EdgeOutcome::keep(
                        (tv == u as Word + 1).then_some(v as Word),
                        (tu == v as Word + 1).then_some(u as Word),
                    )
                },
                |a: &mut Word, b| *a = (*a).min(b),
            )?;
            let homes = cluster.homes();
            let homed: Vec<std::ops::Range<Vertex>> = (0..cluster.machines()).map(|m| cluster.homed(m)).collect();
            // Each accepting home tells the accepted leaf's home.
            let told = cluster.run_round(Vec::new(), |m, _: Vec<(Vertex, Vertex)>| {
                Outbox::sending(
                    homed[m]
                        .clone()
                        .filter_map(|x| accept[x as usize].map(|w| (homes.of(w as Vertex), (w as Vertex, x))))
                        .collect(),
                )
            })?;
            out.matched = told.into_iter().flatten().map(|(w, x)| canonical(w, x)).collect();
            out.matched.sort_unstable();
        }
    }
    tree.release(cluster);
    let gone: Vec<Word> = out.gone(n).into_iter().map(Word::from).collect();
    filter_edges(cluster, &gone, |_, gu, _, gv| gu == 0 && gv == 0)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::local::run_sequential;
    use crate::runtime::ClusterConfig;
    use crate::symbreak::params::{DegreeReductionParams, Fidelity};
    use proptest::prelude::*;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 8.0, true).unwrap(), g).unwrap()
    }

    fn sequential(g: &Graph, th: Thresholds, mode: Mode, tape: RandomTape, calls: u64) -> CallOutcome {
        let mut s = StateVector::of_graph(g);
        run_sequential(&DegreeReductionRule::new(th, mode), tape, &mut s, calls * ROUNDS_PER_CALL);
        decode_calls(&s)
    }

    fn aggregated(g: &Graph, th: Thresholds, mode: Mode, tape: RandomTape, calls: u64) -> CallOutcome {
        let mut c = cluster(g);
        let mut out = CallOutcome::default();
        for k in 0..calls {
            out.absorb(degree_reduction_step(&mut c, &th, mode, tape, k).unwrap());
        }
        out
    }

    fn star(leaves: u32) -> Graph {
        Graph::new(leaves as usize + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    fn desk(mode: Mode, delta: usize) -> Thresholds {
        DegreeReductionParams::new(mode, Fidelity::Desk).thresholds(delta)
    }

    #[test]
    fn star_matching_trace() {
        // High: the hub. Exposed: the hub (16 low neighbors >= 2). Kept: leaves 1 and 2,
        // both good (one exposed neighbor < 2, no leaf neighbors). Both propose to the
        // hub, which accepts leaf 1.
        let g = star(16);
        for seed in 0..5 {
            let tape = RandomTape::new(seed);
            let expect = CallOutcome {
                matched: vec![(0, 1)],
                ..CallOutcome::default()
            };
            assert_eq!(sequential(&g, desk(Mode::Mm, 16), Mode::Mm, tape, 1), expect);
            assert_eq!(aggregated(&g, desk(Mode::Mm, 16), Mode::Mm, tape, 1), expect);
        }
    }

    #[test]
    fn star_independent_set_trace() {
        // Leaves 1 and 2 are good and not adjacent, so both are local minima.
        let g = star(16);
        for seed in 0..5 {
            let tape = RandomTape::new(seed);
            let expect = CallOutcome {
                joined: vec![1, 2],
                removed: vec![0],
                ..CallOutcome::default()
            };
            assert_eq!(sequential(&g, desk(Mode::Mis, 16), Mode::Mis, tape, 1), expect);
            assert_eq!(aggregated(&g, desk(Mode::Mis, 16), Mode::Mis, tape, 1), expect);
        }
    }

    #[test]
    fn low_degree_graph_is_untouched() {
        let g = generate(Family::Grid { rows: 6, cols: 6 }, 0).unwrap();
        for mode in [Mode::Mis, Mode::Mm] {
            let th = desk(mode, 64);
            let out = aggregated(&g, th, mode, RandomTape::new(1), 2);
            assert!(out.is_empty());
            assert!(sequential(&g, th, mode, RandomTape::new(1), 2).is_empty());
        }
    }

    #[test]
    fn aggregation_prunes_departed_vertices() {
        let g = star(16);
        let mut c = cluster(&g);
        let out = degree_reduction_step(&mut c, &desk(Mode::Mis, 16), Mode::Mis, RandomTape::new(3), 0).unwrap();
        assert_eq!(out.removed, vec![0]);
        assert!(c.current_edges().is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rule_equals_aggregation(
            n in 2usize..160,
            alpha in 1usize..5,
            seed in any::<u64>(),
            calls in 1u64..4,
            mis in any::<bool>(),
            scale in 0usize..3,
        ) {
            let g = generate(Family::ForestUnion { n, alpha }, seed).unwrap();
            let mode = if mis { Mode::Mis } else { Mode::Mm };
            // Thresholds at, below and above the real maximum degree.
            let delta = (g.max_degree().max(1) * [1, 2, 4][scale]) / 2 + 1;
            let th = desk(mode, delta);
            let tape = RandomTape::new(seed ^ 0xABCD);
            prop_assert_eq!(sequential(&g, th, mode, tape, calls), aggregated(&g, th, mode, tape, calls));
        }
    }
}

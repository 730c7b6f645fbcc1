use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, HopBall, Vertex};
use crate::local::rule::{LocalRule, RandomTape};
use crate::runtime::Word;

/// Runs `rounds` synchronous rounds of `rule` on an explicit subgraph,
/// starting from the states of round `start`.
///
/// States are exact for every vertex whose distance to the subgraph boundary
/// exceeds the number of rounds run.
pub(crate) fn replay_subgraph<R: LocalRule + ?Sized>(
    rule: &R,
    tape: RandomTape,
    vertices: &[Vertex],
    edges: &[Edge],
    vstate: &mut [Word],
    estate: &mut [Word],
    start: u64,
    rounds: u64,
) {
    if rounds == 0 {
        return;
    }
    let index = |x: Vertex| vertices.binary_search(&x).expect("edge endpoint outside subgraph");
    let ends: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (index(a), index(b))).collect();
    // Incidence lists sorted by neighbor ID: (neighbor index, edge index).
    let mut incidence: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertices.len()];
    for (e, &(a, b)) in ends.iter().enumerate() {
        incidence[a].push((b, e));
        incidence[b].push((a, e));
    }
    for list in &mut incidence {
        list.sort_unstable();
    }
    let mut scratch: Vec<(Vertex, Word)> = Vec::new();
    let mut next_v = vec![0; vertices.len()];
    let mut next_e = vec![0; edges.len()];
    for r in start + 1..=start + rounds {
        for (i, &v) in vertices.iter().enumerate() {
            scratch.clear();
            scratch.extend(incidence[i].iter().map(|&(j, e)| (vertices[j], estate[e])));
            next_v[i] = rule.vertex(v, vstate[i], &scratch, tape.view(v), r);
        }
        for (e, &(a, b)) in ends.iter().enumerate() {
            next_e[e] = rule.edge(vertices[a], vstate[a], vertices[b], vstate[b], estate[e], r);
        }
        vstate.copy_from_slice(&next_v);
        estate.copy_from_slice(&next_e);
    }
}

/// Sequential run of `rule` over a whole graph; the reference every
/// distributed execution is compared with.
pub fn run_sequential<R: LocalRule + ?Sized>(
    rule: &R,
    tape: RandomTape,
    states: &mut crate::local::rule::StateVector,
    rounds: u64,
) {
    let vertices: Vec<Vertex> = (0..states.vertex.len() as Vertex).collect();
    let edges = states.edges.clone();
    replay_subgraph(rule, tape, &vertices, &edges, &mut states.vertex, &mut states.edge, states.round, rounds);
    states.round += rounds;
}

/// State of the center of `ball` and of its incident edges after `i` more
/// rounds, computed from the round-`base_round` states of the ball alone.
///
/// `base_vertex` and `base_edge` are aligned with `ball.vertices` and `ball.edges`.
pub fn local_replay<R: LocalRule + ?Sized>(
    rule: &R,
    tape: RandomTape,
    ball: &HopBall,
    base_round: u64,
    base_vertex: &[Word],
    base_edge: &[Word],
    i: u64,
) -> Result<(Word, Vec<(Edge, Word)>), SimFault> {
    if i as usize > ball.radius {
        return Err(SimFault::Argument(format!(
            "cannot replay {i} rounds inside a radius-{} ball",
            ball.radius
        )));
    }
    let mut vs = base_vertex.to_vec();
    let mut es = base_edge.to_vec();
    replay_subgraph(rule, tape, &ball.vertices, &ball.edges, &mut vs, &mut es, base_round, i);
    let c = ball.center;
    let center = vs[ball.vertices.binary_search(&c).expect("center in ball")];
    let incident = ball
        .edges
        .iter()
        .zip(es)
        .filter(|(&(a, b), _)| a == c || b == c)
        .map(|(&e, s)| (e, s))
        .collect();
    Ok((center, incident))
}

/// Replays every hosted structure in parallel and returns each center's state
/// and its incident edge states.
pub(crate) fn replay_centers<R: LocalRule + ?Sized>(
    rule: &R,
    tape: RandomTape,
    hosted: &mut [Hosted],
    start: u64,
    rounds: u64,
) {
    hosted.par_iter_mut().for_each(|h| {
        let mut vs = h.vstate.clone();
        let mut es = h.estate.clone();
        replay_subgraph(rule, tape, &h.vertices, &h.edges, &mut vs, &mut es, start, rounds);
        let ci = h.vertices.binary_search(&h.center).expect("center hosted");
        h.center_state = vs[ci];
        h.center_edges = h
            .edges
            .iter()
            .zip(es)
            .filter(|(&(a, b), _)| a == h.center || b == h.center)
            .map(|(_, s)| s)
            .collect();
    });
}

/// Every vertex and edge state of `h` after `rounds` more rounds, aligned
/// with `h.vertices` and `h.edges`.
pub(crate) fn replay_hosted<R: LocalRule + ?Sized>(
    rule: &R,
    tape: RandomTape,
    h: &Hosted,
    start: u64,
    rounds: u64,
) -> (Vec<Word>, Vec<Word>) {
    let mut vs = h.vstate.clone();
    let mut es = h.estate.clone();
    replay_subgraph(rule, tape, &h.vertices, &h.edges, &mut vs, &mut es, start, rounds);
    (vs, es)
}

/// Copies of states around one center, kept at the center's home.
#[derive(Debug, Clone, Default)]
pub(crate) struct Hosted {
    pub center: Vertex,
    pub vertices: Vec<Vertex>,
    pub vstate: Vec<Word>,
    pub edges: Vec<Edge>,
    pub estate: Vec<Word>,
    /// Outputs of the last replay: the center and its incident edges in `edges` order.
    pub center_state: Word,
    pub center_edges: Vec<Word>,
}

impl Hosted {
    pub fn new(center: Vertex, edges: Vec<Edge>) -> Self {
        let mut vertices: Vec<Vertex> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        vertices.push(center);
        vertices.sort_unstable();
        vertices.dedup();
        Hosted {
            center,
            vstate: vec![0; vertices.len()],
            estate: vec![0; edges.len()],
            vertices,
            edges,
            ..Hosted::default()
        }
    }

    /// ID, state and tape word per vertex; endpoints and state per edge.
    pub fn words(&self) -> usize {
        3 * self.vertices.len() + 3 * self.edges.len()
    }

    pub fn vertex_slot(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn edge_slot(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, t_hop, Family};
    use crate::local::rule::StateVector;
    use crate::local::testing::{naive, HashRule};

    fn base_of(ball: &HopBall, s: &StateVector) -> (Vec<Word>, Vec<Word>) {
        (
            ball.vertices.iter().map(|&v| s.vertex[v as usize]).collect(),
            ball.edges.iter().map(|&e| s.edge_state(e).unwrap()).collect(),
        )
    }

    #[test]
    fn zero_rounds_returns_base() {
        let g = generate(Family::Tree { n: 20 }, 1).unwrap();
        let s = StateVector::of_graph(&g);
        let ball = t_hop(&g, 3, 2);
        let (bv, be) = base_of(&ball, &s);
        let (c, _) = local_replay(&HashRule, RandomTape::new(0), &ball, 0, &bv, &be, 0).unwrap();
        assert_eq!(c, 3);
    }

    #[test]
    fn replay_matches_whole_graph_run() {
        let g = generate(Family::ForestUnion { n: 150, alpha: 3 }, 6).unwrap();
        let tape = RandomTape::new(77);
        let beta = 4;
        let base = naive(&g, &HashRule, tape, beta);
        for center in [0, 17, 99, 149] {
            for i in 0..=3u64 {
                let ball = t_hop(&g, center, 3);
                let (bv, be) = base_of(&ball, &base);
                let (c, inc) = local_replay(&HashRule, tape, &ball, beta, &bv, &be, i).unwrap();
                let want = naive(&g, &HashRule, tape, beta + i);
                assert_eq!(c, want.vertex[center as usize]);
                for (e, s) in inc {
                    assert_eq!(Some(s), want.edge_state(e));
                }
            }
        }
    }

    #[test]
    fn replay_is_pure() {
        let g = generate(Family::Grid { rows: 6, cols: 6 }, 0).unwrap();
        let s = StateVector::of_graph(&g);
        let ball = t_hop(&g, 14, 2);
        let (bv, be) = base_of(&ball, &s);
        let a = local_replay(&HashRule, RandomTape::new(4), &ball, 0, &bv, &be, 2).unwrap();
        let b = local_replay(&HashRule, RandomTape::new(4), &ball, 0, &bv, &be, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_rounds_beyond_radius() {
        let g = generate(Family::Tree { n: 10 }, 1).unwrap();
        let ball = t_hop(&g, 0, 1);
        let s = StateVector::of_graph(&g);
        let (bv, be) = base_of(&ball, &s);
        assert!(local_replay(&HashRule, RandomTape::new(0), &ball, 0, &bv, &be, 2).is_err());
    }
}

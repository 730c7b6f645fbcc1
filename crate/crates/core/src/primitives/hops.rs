//! Hop collection by exponential growth.
//!
//! A vertex's collected structure of reach `R` is every edge incident to a
//! vertex within distance `R` of it; its vertex set spans distance `R + 1`.
//! Reach grows by unions of members' structures, two rounds per step.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, HopBall, Vertex};
use crate::primitives::separable::SeparableFn;
use crate::primitives::tree::global_reduce;
use crate::runtime::{Cluster, Outbox};

const BALLS: &str = "balls";

/// Compact adjacency over an explicit edge set.
pub(crate) struct LocalGraph {
    pub vertices: Vec<Vertex>,
    offsets: Vec<usize>,
    adj: Vec<usize>,
}

impl LocalGraph {
    pub fn new(extra: Vertex, edges: &[Edge]) -> Self {
        let mut vertices: Vec<Vertex> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        vertices.push(extra);
        vertices.sort_unstable();
        vertices.dedup();
        let mut deg = vec![0usize; vertices.len() + 1];
        let index = |x: Vertex| vertices.binary_search(&x).unwrap();
        for &(a, b) in edges {
            deg[index(a) + 1] += 1;
            deg[index(b) + 1] += 1;
        }
        for i in 1..deg.len() {
            deg[i] += deg[i - 1];
        }
        let mut fill = deg.clone();
        let mut adj = vec![0; 2 * edges.len()];
        for &(a, b) in edges {
            let (ia, ib) = (index(a), index(b));
            adj[fill[ia]] = ib;
            fill[ia] += 1;
            adj[fill[ib]] = ia;
            fill[ib] += 1;
        }
        LocalGraph {
            vertices,
            offsets: deg,
            adj,
        }
    }

    pub fn index(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Hop distances from `from`, `usize::MAX` where unreachable.
    pub fn distances(&self, from: Vertex) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let start = self.index(from).expect("center is always a local vertex");
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

/// Words of a collected structure: its vertices (the center included) plus two per edge.
pub(crate) fn structure_words(center: Vertex, edges: &[Edge]) -> usize {
    let mut vs: Vec<Vertex> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    vs.push(center);
    vs.sort_unstable();
    vs.dedup();
    vs.len() + 2 * edges.len()
}

/// Edges with an endpoint within `reach` of `center`.
fn trim(center: Vertex, edges: Vec<Edge>, reach: usize) -> Vec<Edge> {
    let local = LocalGraph::new(center, &edges);
    let dist = local.distances(center);
    let d = |x: Vertex| dist[local.index(x).unwrap()];
    edges
        .into_iter()
        .filter(|&(a, b)| d(a).min(d(b)) <= reach)
        .collect()
}

/// Which structure a member contributes to a growth step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece {
    /// The member's current structure.
    Grown,
    /// The member's incident edges.
    Incident,
}

/// What one growth step produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct StepOutcome {
    pub changed: bool,
    /// Lowest tracked vertex over budget, with its size.
    pub overflow: Option<(Vertex, usize)>,
}

/// Structures held at the homes of tracked vertices, plus every vertex's incident edges.
#[derive(Debug, Clone)]
pub(crate) struct Collection {
    reach: usize,
    budget: usize,
    tracked: Vec<bool>,
    incident: Vec<Vec<Edge>>,
    grown: Vec<Vec<Edge>>,
}

impl Collection {
    /// One round: every shard sends each edge to the homes of both endpoints.
    pub fn setup(cluster: &mut Cluster, tracked: Vec<bool>, budget: usize) -> Result<(Self, StepOutcome), SimFault> {
        let n = cluster.config().n;
        assert_eq!(tracked.len(), n);
        let homes = cluster.homes();
        let shards = cluster.shards().to_vec();
        let received = cluster.run_round(Vec::new(), |m, _: Vec<Edge>| {
            Outbox::sending(
                shards[m]
                    .iter()
                    .flat_map(|&(u, v)| [(homes.of(u), (u, v)), (homes.of(v), (u, v))])
                    .collect(),
            )
        })?;
        let mut incident: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for (m, edges) in received.into_iter().enumerate() {
            for e in edges {
                for x in [e.0, e.1] {
                    if homes.of(x) == m {
                        incident[x as usize].push(e);
                    }
                }
            }
        }
        incident.par_iter_mut().for_each(|e| e.sort_unstable());
        let grown = incident
            .iter()
            .zip(&tracked)
            .map(|(e, &t)| if t { e.clone() } else { Vec::new() })
            .collect();
        let c = Collection {
            reach: 0,
            budget,
            tracked,
            incident,
            grown,
        };
        c.charge(cluster)?;
        let outcome = StepOutcome {
            changed: c.incident.iter().any(|e| !e.is_empty()),
            overflow: c.first_overflow(),
        };
        Ok((c, outcome))
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.budget = budget;
    }

    /// Collected edges of a tracked vertex.
    pub fn grown(&self, v: Vertex) -> &[Edge] {
        &self.grown[v as usize]
    }

    fn first_overflow(&self) -> Option<(Vertex, usize)> {
        (0..self.grown.len())
            .into_par_iter()
            .filter(|&v| self.tracked[v])
            .map(|v| (v as Vertex, structure_words(v as Vertex, &self.grown[v])))
            .filter(|&(_, w)| w > self.budget)
            .min_by_key(|&(v, _)| v)
    }

    fn charge(&self, cluster: &mut Cluster) -> Result<(), SimFault> {
        let words = (0..cluster.machines())
            .map(|m| {
                cluster
                    .homed(m)
                    .map(|v| {
                        let v = v as usize;
                        let own = 2 * self.incident[v].len();
                        own + if self.tracked[v] { structure_words(v as Vertex, &self.grown[v]) } else { 0 }
                    })
                    .sum()
            })
            .collect();
        cluster.set_resident(BALLS, words)
    }

    /// Two rounds: tracked vertices request the chosen piece of every member,
    /// then merge and trim to `target`. `piece(u)` is evaluated at `home(u)`.
    pub fn grow<F>(&mut self, cluster: &mut Cluster, target: usize, piece: F) -> Result<StepOutcome, SimFault>
    where
        F: Fn(Vertex) -> Piece + Sync,
    {
        let homes = cluster.homes();
        let machines = cluster.machines();
        let homed: Vec<std::ops::Range<Vertex>> = (0..machines).map(|m| cluster.homed(m)).collect();
        let members = |m: usize| -> Vec<Vertex> {
            let mut wanted: Vec<Vertex> = homed[m]
                .clone()
                .filter(|&v| self.tracked[v as usize])
                .flat_map(|v| {
                    self.grown[v as usize]
                        .iter()
                        .flat_map(|&(a, b)| [a, b])
                        .chain(std::iter::once(v))
                        .collect::<Vec<_>>()
                })
                .collect();
            wanted.sort_unstable();
            wanted.dedup();
            wanted
        };
        let requests = cluster.run_round(Vec::new(), |m, _: Vec<(Vertex, Vertex)>| {
            Outbox::sending(
                members(m)
                    .into_iter()
                    .filter(|&u| homes.of(u) != m)
                    .map(|u| (homes.of(u), (u, m as Vertex)))
                    .collect(),
            )
        })?;
        let piece_of = |u: Vertex| -> Option<&Vec<Edge>> {
            match piece(u) {
                Piece::Grown if self.tracked[u as usize] => Some(&self.grown[u as usize]),
                Piece::Grown | Piece::Incident => Some(&self.incident[u as usize]),
            }
        };
        // A home whose replies would exceed half a machine answers nobody.
        let limit = cluster.cap() / 2;
        let responses = cluster.run_round(requests, |_, reqs: Vec<(Vertex, Vertex)>| {
            let words: usize = reqs.iter().filter_map(|&(u, _)| piece_of(u)).map(|e| 1 + 2 * e.len()).sum();
            if words > limit {
                return Outbox::new();
            }
            let send = reqs
                .into_iter()
                .filter_map(|(u, to)| piece_of(u).map(|edges| (to as usize, (u, edges.clone()))))
                .collect();
            Outbox::sending(send)
        })?;
        let reach = target;
        let updated: Vec<Vec<(Vertex, Option<Vec<Edge>>)>> = responses
            .into_par_iter()
            .enumerate()
            .map(|(m, mut got)| {
                for u in members(m).into_iter().filter(|&u| homes.of(u) == m) {
                    if let Some(edges) = piece_of(u) {
                        got.push((u, edges.clone()));
                    }
                }
                got.sort_unstable_by_key(|(u, _)| *u);
                homed[m]
                    .clone()
                    .filter(|&v| self.tracked[v as usize])
                    .map(|v| {
                        let own = &self.grown[v as usize];
                        let mut union: Vec<Edge> = own.clone();
                        let mut present: Vec<Vertex> = own.iter().flat_map(|&(a, b)| [a, b]).collect();
                        present.push(v);
                        present.sort_unstable();
                        present.dedup();
                        let mut refused = false;
                        for u in present {
                            match got.binary_search_by_key(&u, |(x, _)| *x) {
                                Ok(i) => union.extend_from_slice(&got[i].1),
                                Err(_) => refused = true,
                            }
                        }
                        if refused {
                            return (v, None);
                        }
                        union.sort_unstable();
                        union.dedup();
                        (v, Some(trim(v, union, reach)))
                    })
                    .collect()
            })
            .collect();
        let mut changed = false;
        let mut refused = None;
        for (v, edges) in updated.into_iter().flatten() {
            let Some(edges) = edges else {
                refused = refused.or(Some((v, usize::MAX)));
                continue;
            };
            let slot = &mut self.grown[v as usize];
            changed |= edges.len() != slot.len();
            *slot = edges;
        }
        self.reach = target;
        let overflow = refused.or_else(|| self.first_overflow());
        if overflow.is_none() {
            self.charge(cluster)?;
        }
        Ok(StepOutcome { changed, overflow })
    }

    /// Two rounds: every home asks the homes of the vertices it stores whether
    /// they remain, then drops departed vertices and untracks `untrack`.
    /// Structures stay exact for the remaining graph at the same reach.
    pub fn refresh(&mut self, cluster: &mut Cluster, remains: &[bool], untrack: &[bool]) -> Result<(), SimFault> {
        let homes = cluster.homes();
        let machines = cluster.machines();
        let homed: Vec<std::ops::Range<Vertex>> = (0..machines).map(|m| cluster.homed(m)).collect();
        let stored = |m: usize| -> Vec<Vertex> {
            let mut xs: Vec<Vertex> = homed[m]
                .clone()
                .flat_map(|v| {
                    let v = v as usize;
                    let grown = if self.tracked[v] { &self.grown[v][..] } else { &[] };
                    self.incident[v].iter().chain(grown).flat_map(|&(a, b)| [a, b]).collect::<Vec<_>>()
                })
                .filter(|&x| homes.of(x) != m)
                .collect();
            xs.sort_unstable();
            xs.dedup();
            xs
        };
        let requests = cluster.run_round(Vec::new(), |m, _: Vec<(Vertex, Vertex)>| {
            Outbox::sending(stored(m).into_iter().map(|x| (homes.of(x), (x, m as Vertex))).collect())
        })?;
        // Replies carry the flag; their content is what `remains` holds.
        cluster.run_round(requests, |_, reqs: Vec<(Vertex, Vertex)>| {
            Outbox::sending(
                reqs.into_iter()
                    .map(|(x, to)| (to as usize, (x, Vertex::from(remains[x as usize]))))
                    .collect(),
            )
        })?;
        let reach = self.reach;
        let keep = |&(a, b): &Edge| remains[a as usize] && remains[b as usize];
        self.incident.par_iter_mut().enumerate().for_each(|(v, edges)| {
            if remains[v] {
                edges.retain(keep);
            } else {
                edges.clear();
            }
        });
        let tracked = &mut self.tracked;
        tracked
            .par_iter_mut()
            .zip(&mut self.grown)
            .enumerate()
            .for_each(|(v, (t, edges))| {
                if *t && remains[v] && !untrack[v] {
                    let kept: Vec<Edge> = edges.iter().copied().filter(keep).collect();
                    *edges = trim(v as Vertex, kept, reach);
                } else {
                    *t = false;
                    edges.clear();
                }
            });
        self.charge(cluster)
    }

    pub fn release(self, cluster: &mut Cluster) {
        cluster.clear_resident(BALLS);
    }
}

fn overflow_fault(center: Vertex, words: usize, budget: usize) -> SimFault {
    SimFault::BallOverflow { center, words, budget }
}

/// Default per-ball budget: `floor(sqrt(S / 2))` words, which keeps every
/// home's reply traffic within half a machine.
pub fn default_ball_budget(cluster: &Cluster) -> usize {
    ((cluster.cap() / 2) as f64).sqrt().floor() as usize
}

/// The induced `t`-hop of every center.
///
/// When every vertex is a center, reach doubles per step (`1 + 2 * ceil(log2(t + 1))`
/// rounds); otherwise it grows by one per step (`1 + 2t` rounds). `t = 0` needs no rounds.
pub fn collect_hops(
    cluster: &mut Cluster,
    centers: &[Vertex],
    t: usize,
    budget: usize,
) -> Result<Vec<HopBall>, SimFault> {
    let n = cluster.config().n;
    if let Some(&bad) = centers.iter().find(|&&c| c as usize >= n) {
        return Err(SimFault::Argument(format!("center {bad} out of range")));
    }
    if t == 0 {
        return Ok(centers
            .iter()
            .map(|&c| HopBall {
                center: c,
                radius: 0,
                vertices: vec![c],
                edges: Vec::new(),
            })
            .collect());
    }
    let mut tracked = vec![false; n];
    for &c in centers {
        tracked[c as usize] = true;
    }
    let everyone = tracked.iter().all(|&x| x);
    let (mut coll, first) = Collection::setup(cluster, tracked, budget)?;
    if let Some((c, w)) = first.overflow {
        coll.release(cluster);
        return Err(overflow_fault(c, w, budget));
    }
    while coll.reach() < t {
        let r = coll.reach();
        let step = if everyone {
            coll.grow(cluster, (2 * r + 1).min(t), |_| Piece::Grown)?
        } else {
            coll.grow(cluster, r + 1, |_| Piece::Incident)?
        };
        if let Some((c, w)) = step.overflow {
            coll.release(cluster);
            return Err(overflow_fault(c, w, budget));
        }
    }
    let balls = centers
        .par_iter()
        .map(|&c| induced(c, coll.grown(c), t))
        .collect();
    coll.release(cluster);
    Ok(balls)
}

/// The induced `t`-hop of `center` from a structure of reach at least `t`.
pub(crate) fn induced(center: Vertex, edges: &[Edge], t: usize) -> HopBall {
    let local = LocalGraph::new(center, edges);
    let dist = local.distances(center);
    let within = |x: Vertex| dist[local.index(x).unwrap()] <= t;
    let vertices = local
        .vertices
        .iter()
        .copied()
        .filter(|&x| within(x))
        .collect();
    let edges = edges
        .iter()
        .copied()
        .filter(|&(a, b)| within(a) && within(b))
        .collect();
    HopBall {
        center,
        radius: t,
        vertices,
        edges,
    }
}

/// Grows every vertex's structure to its whole component.
///
/// Returns the size of the first oversized structure when some component
/// exceeds `budget`. Each step is followed by a cluster-wide check of the
/// overflow and progress flags.
pub(crate) fn collect_components(cluster: &mut Cluster, budget: usize) -> Result<Result<Collection, usize>, SimFault> {
    let n = cluster.config().n;
    let (mut coll, mut step) = Collection::setup(cluster, vec![true; n], budget)?;
    loop {
        let flag = if step.overflow.is_some() {
            2
        } else {
            u64::from(step.changed)
        };
        let per_machine = (0..cluster.machines()).map(|m| if m == 0 { flag } else { 0 }).collect();
        match global_reduce(cluster, per_machine, |a, b| SeparableFn::Max.combine(a, b))? {
            2 => {
                coll.release(cluster);
                return Ok(Err(step.overflow.expect("overflow flagged").1));
            }
            0 => return Ok(Ok(coll)),
            _ => {}
        }
        let r = coll.reach();
        step = coll.grow(cluster, 2 * r + 1, |_| Piece::Grown)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, t_hop, Family, Graph};
    use crate::runtime::ClusterConfig;
    use proptest::prelude::*;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 8.0, true).unwrap(), g).unwrap()
    }

    fn path(n: u32) -> Graph {
        Graph::new(n as usize, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn path_radius_two_everyone() {
        let g = path(9);
        let mut c = cluster(&g);
        let all: Vec<Vertex> = g.vertices().collect();
        let balls = collect_hops(&mut c, &all, 2, 64).unwrap();
        for b in &balls {
            assert_eq!(*b, t_hop(&g, b.center, 2));
        }
        // Setup plus two doubling steps.
        assert_eq!(c.report().rounds_elapsed, 5);
    }

    #[test]
    fn radius_one_costs_one_step() {
        let g = path(5);
        let mut c = cluster(&g);
        let balls = collect_hops(&mut c, &[2], 1, 64).unwrap();
        assert_eq!(balls[0].vertices, vec![1, 2, 3]);
        assert_eq!(c.report().rounds_elapsed, 3);
    }

    #[test]
    fn radius_zero_is_free() {
        let g = path(5);
        let mut c = cluster(&g);
        let balls = collect_hops(&mut c, &[4], 0, 1).unwrap();
        assert_eq!(balls[0].vertices, vec![4]);
        assert!(balls[0].edges.is_empty());
        assert_eq!(c.report().rounds_elapsed, 0);
    }

    #[test]
    fn oversized_star_faults_on_hub() {
        let g = Graph::new(21, (1..21).map(|i| (0, i))).unwrap();
        let mut c = cluster(&g);
        let err = collect_hops(&mut c, &[0], 1, 20).unwrap_err();
        assert!(matches!(err, SimFault::BallOverflow { center: 0, budget: 20, .. }));
    }

    #[test]
    fn cycle_antipode() {
        let g = Graph::new(6, (0..6).map(|i| crate::graph::canonical(i, (i + 1) % 6))).unwrap();
        let mut c = cluster(&g);
        let balls = collect_hops(&mut c, &[0], 3, 64).unwrap();
        assert_eq!(balls[0].vertices.len(), 6);
        assert_eq!(balls[0].edges.len(), 6);
    }

    #[test]
    fn components_reach_fixpoint() {
        let g = Graph::new(9, [(0, 1), (1, 2), (2, 3), (5, 6), (7, 8), (6, 7)]).unwrap();
        let mut c = cluster(&g);
        let coll = collect_components(&mut c, 64).unwrap().unwrap();
        assert_eq!(coll.grown(0), &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(coll.grown(8), &[(5, 6), (6, 7), (7, 8)]);
        assert!(coll.grown(4).is_empty());
    }

    #[test]
    fn components_too_large_report_none() {
        let g = path(40);
        let mut c = cluster(&g);
        assert!(collect_components(&mut c, 30).unwrap().unwrap_err() > 30);
        assert_eq!(c.report().total_space_now, 2 * g.m());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn matches_bfs_oracle(n in 2usize..150, seed in any::<u64>(), t in 1usize..5, family in 0u8..3, subset in any::<bool>()) {
            let g = match family {
                0 => generate(Family::Tree { n }, seed).unwrap(),
                1 => generate(Family::Grid { rows: n.div_ceil(10), cols: 10 }, seed).unwrap(),
                _ => generate(Family::ForestUnion { n, alpha: 2 }, seed).unwrap(),
            };
            let centers: Vec<Vertex> = if subset {
                g.vertices().filter(|v| crate::hash::mix64(*v as u64 ^ seed) % 3 == 0).collect()
            } else {
                g.vertices().collect()
            };
            // Machines large enough that the default budget holds whole-graph balls.
            let mut c = Cluster::init(ClusterConfig::for_graph(&g, 0.5, 262144.0, true).unwrap(), &g).unwrap();
            let budget = default_ball_budget(&c);
            let balls = collect_hops(&mut c, &centers, t, budget).unwrap();
            for b in &balls {
                prop_assert_eq!(b, &t_hop(&g, b.center, t));
            }
            let steps = if centers.len() < g.n() { t } else { (t + 1).next_power_of_two().trailing_zeros() as usize };
            prop_assert_eq!(c.report().rounds_elapsed as usize, 1 + 2 * steps);
        }
    }
}

//! Compressed execution hosted at a subset of centers. Every other vertex
//! takes its state from one hosting center within one hop, its authority.
//!
//! A center holding a reach-`R` structure computes exactly, for `R` rounds,
//! every vertex within one hop of it and every edge incident to such a vertex.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::local::blind::{owner_messages, push_states, subscribe, Item, Subscriptions};
use crate::local::replay::{replay_hosted, replay_subgraph, Hosted};
use crate::local::rule::{pack_edge, LocalRule, RandomTape, StateVector};
use crate::runtime::{Cluster, Word};

const HOSTED: &str = "hosted";

pub struct CenterSession<'a, R: LocalRule + ?Sized> {
    rule: &'a R,
    tape: RandomTape,
    epoch: u64,
    states: StateVector,
    hosted: Vec<Option<Hosted>>,
    authority: Vec<Option<Vertex>>,
    /// Vertices without edges or authority; their homes advance them alone.
    isolated: Vec<Vertex>,
    subs: Option<Subscriptions>,
    stale: bool,
}

impl<'a, R: LocalRule + ?Sized> CenterSession<'a, R> {
    /// Hosts `structures[c]` at the home of every center `c`, starting from the
    /// initial states of the cluster's current edges. Each structure must have
    /// reach at least `epoch`; every vertex with an edge needs an authority whose
    /// structure contains it and its incident edges. No rounds.
    pub(crate) fn start(
        cluster: &mut Cluster,
        rule: &'a R,
        tape: RandomTape,
        epoch: u64,
        structures: Vec<Option<Vec<Edge>>>,
        authority: Vec<Option<Vertex>>,
    ) -> Result<Self, SimFault> {
        let n = cluster.config().n;
        if epoch == 0 {
            return Err(SimFault::Argument("epoch must be at least 1".into()));
        }
        if structures.len() != n || authority.len() != n {
            return Err(SimFault::Argument("one structure and authority slot per vertex".into()));
        }
        let states = StateVector::initial(n, cluster.current_edges());
        let hosted: Vec<Option<Hosted>> = structures
            .into_par_iter()
            .enumerate()
            .map(|(c, s)| {
                s.map(|edges| {
                    let mut h = Hosted::new(c as Vertex, edges);
                    for (i, &x) in h.vertices.iter().enumerate() {
                        h.vstate[i] = x as Word;
                    }
                    for (i, &(a, b)) in h.edges.iter().enumerate() {
                        h.estate[i] = pack_edge(a, b);
                    }
                    h
                })
            })
            .collect();
        let holds = |c: Option<Vertex>, it: Item| match (c, it) {
            (Some(c), Item::Vertex(v)) => hosted[c as usize].as_ref().is_some_and(|h| h.vertex_slot(v).is_some()),
            (Some(c), Item::Edge(e)) => hosted[c as usize].as_ref().is_some_and(|h| h.edge_slot(e).is_some()),
            (None, _) => false,
        };
        let mut has_edge = vec![false; n];
        for &(a, b) in &states.edges {
            has_edge[a as usize] = true;
            has_edge[b as usize] = true;
            if !holds(authority[a as usize], Item::Edge((a, b))) {
                return Err(SimFault::Argument(format!("edge ({a},{b}) is not hosted by its authority")));
            }
        }
        let mut isolated = Vec::new();
        for v in 0..n {
            match authority[v] {
                None if has_edge[v] => {
                    return Err(SimFault::Argument(format!("vertex {v} has edges but no authority")));
                }
                None => isolated.push(v as Vertex),
                Some(c) if !holds(Some(c), Item::Vertex(v as Vertex)) => {
                    return Err(SimFault::Argument(format!("vertex {v} is not hosted by its authority {c}")));
                }
                Some(_) => {}
            }
        }
        let words = (0..cluster.machines())
            .map(|m| {
                cluster
                    .homed(m)
                    .map(|v| hosted[v as usize].as_ref().map_or(0, Hosted::words))
                    .sum()
            })
            .collect();
        cluster.set_resident(HOSTED, words)?;
        Ok(CenterSession {
            rule,
            tape,
            epoch,
            states,
            hosted,
            authority,
            isolated,
            subs: None,
            stale: false,
        })
    }

    pub fn states(&self) -> &StateVector {
        &self.states
    }

    pub fn finish(self, cluster: &mut Cluster) -> StateVector {
        cluster.clear_resident(HOSTED);
        self.states
    }

    /// Runs `rounds` LOCAL rounds in epochs of at most `epoch`. Every epoch but
    /// the first costs one push round; the first push is preceded by one
    /// subscription round.
    pub fn advance(&mut self, cluster: &mut Cluster, mut rounds: u64) -> Result<(), SimFault> {
        while rounds > 0 {
            if self.stale {
                if self.subs.is_none() {
                    let homes = cluster.homes();
                    let authority = &self.authority;
                    self.subs = Some(subscribe(cluster, &self.hosted, |it| {
                        authority[it.owner() as usize].map(|c| homes.of(c))
                    })?);
                }
                let subs = self.subs.as_ref().expect("subscribed");
                let outgoing = owner_messages(subs, &self.states);
                push_states(cluster, &mut self.hosted, &outgoing)?;
                self.stale = false;
            }
            let len = rounds.min(self.epoch);
            let start = self.states.round;
            let authority = &self.authority;
            let results: Vec<(Vec<(Vertex, Word)>, Vec<(Edge, Word)>)> = self
                .hosted
                .par_iter()
                .flatten()
                .map(|h| {
                    let (vs, es) = replay_hosted(self.rule, self.tape, h, start, len);
                    let owns = |x: Vertex| authority[x as usize] == Some(h.center);
                    let vertices = h.vertices.iter().zip(vs).filter(|(&x, _)| owns(x)).map(|(&x, s)| (x, s)).collect();
                    let edges = h.edges.iter().zip(es).filter(|(&e, _)| owns(e.0)).map(|(&e, s)| (e, s)).collect();
                    (vertices, edges)
                })
                .collect();
            for (vertices, edges) in results {
                for (x, s) in vertices {
                    self.states.vertex[x as usize] = s;
                }
                for (e, s) in edges {
                    let i = self.states.edges.binary_search(&e).expect("owned edge");
                    self.states.edge[i] = s;
                }
            }
            for &v in &self.isolated {
                let slot = &mut self.states.vertex[v as usize..v as usize + 1];
                replay_subgraph(self.rule, self.tape, &[v], &[], slot, &mut [], start, len);
            }
            self.states.round += len;
            rounds -= len;
            self.stale = true;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::local::testing::{naive, HashRule};
    use crate::primitives::hops::{Collection, Piece};
    use crate::runtime::ClusterConfig;
    use proptest::prelude::*;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 4096.0, true).unwrap(), g).unwrap()
    }

    /// Centers: a dominating set chosen greedily by ID; everyone else picks its
    /// smallest center neighbor.
    fn dominate(g: &Graph) -> (Vec<bool>, Vec<Option<Vertex>>) {
        let mut center = vec![false; g.n()];
        let mut covered = vec![false; g.n()];
        for v in g.vertices() {
            if !covered[v as usize] && !g.neighbors(v).is_empty() {
                center[v as usize] = true;
                covered[v as usize] = true;
                for &u in g.neighbors(v) {
                    covered[u as usize] = true;
                }
            }
        }
        let authority = g
            .vertices()
            .map(|v| {
                if center[v as usize] {
                    Some(v)
                } else {
                    g.neighbors(v).iter().copied().find(|&u| center[u as usize])
                }
            })
            .collect();
        (center, authority)
    }

    fn run(g: &Graph, tape: RandomTape, reach: usize, rounds: u64) -> (StateVector, u64) {
        let mut c = cluster(g);
        let (center, authority) = dominate(g);
        let (mut coll, _) = Collection::setup(&mut c, center.clone(), 1 << 20).unwrap();
        while coll.reach() < reach {
            let r = coll.reach();
            coll.grow(&mut c, r + 1, |_| Piece::Incident).unwrap();
        }
        let structures = g
            .vertices()
            .map(|v| center[v as usize].then(|| coll.grown(v).to_vec()))
            .collect();
        coll.release(&mut c);
        let before = c.report().rounds_elapsed;
        let mut s = CenterSession::start(&mut c, &HashRule, tape, reach as u64, structures, authority).unwrap();
        s.advance(&mut c, rounds).unwrap();
        let used = c.report().rounds_elapsed - before;
        (s.finish(&mut c), used)
    }

    #[test]
    fn star_hosted_at_hub() {
        let mut edges: Vec<Edge> = (1..12).map(|i| (0, i)).collect();
        edges.push((3, 4));
        let g = Graph::new(14, edges).unwrap();
        let tape = RandomTape::new(4);
        let (got, rounds) = run(&g, tape, 2, 6);
        assert_eq!(got, naive(&g, &HashRule, tape, 6));
        // Two further epochs: one subscription round, two pushes.
        assert_eq!(rounds, 3);
    }

    #[test]
    fn missing_authority_is_rejected() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let mut c = cluster(&g);
        let structures = vec![Some(vec![(0, 1)]), None, None];
        let authority = vec![Some(0), Some(0), None];
        let err = CenterSession::start(&mut c, &HashRule, RandomTape::new(0), 1, structures, authority).err();
        assert!(matches!(err, Some(SimFault::Argument(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn equals_naive(n in 1usize..120, seed in any::<u64>(), reach in 1usize..4, rounds in 0u64..10) {
            let g = generate(Family::ForestUnion { n, alpha: 2 }, seed).unwrap();
            let tape = RandomTape::new(seed ^ 0x55);
            let (got, used) = run(&g, tape, reach, rounds);
            prop_assert_eq!(got, naive(&g, &HashRule, tape, rounds));
            let epochs = rounds.div_ceil(reach as u64);
            prop_assert_eq!(used, if epochs > 1 { epochs } else { 0 });
        }
    }
}

//! Round-by-round simulation: one MPC round per LOCAL round.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::local::rule::{LocalRule, RandomTape, StateVector};
use crate::runtime::{Cluster, Outbox, Word, Words};

const ADJACENCY: &str = "adjacency";

#[derive(Debug, Clone, Copy)]
enum StateMsg {
    Vertex(Vertex, Word),
    Edge(Edge, Word),
}

impl Words for StateMsg {
    fn words(&self) -> usize {
        match self {
            StateMsg::Vertex(..) => 2,
            StateMsg::Edge(..) => 3,
        }
    }
}

/// Vertex states live at their homes; an edge state lives at the home of its
/// smaller endpoint. Each round, homes trade the states their neighbors need.
pub struct DirectSession<'a, R: LocalRule + ?Sized> {
    rule: &'a R,
    tape: RandomTape,
    states: StateVector,
    adjacency: Vec<Vec<Vertex>>,
}

impl<'a, R: LocalRule + ?Sized> DirectSession<'a, R> {
    /// Starts from the initial states of the cluster's current edges; one setup round.
    pub fn start(cluster: &mut Cluster, rule: &'a R, tape: RandomTape) -> Result<Self, SimFault> {
        let states = StateVector::initial(cluster.config().n, cluster.current_edges());
        Self::resume(cluster, rule, tape, states)
    }

    /// Continues from `states`, whose edges must be the cluster's current edges; one setup round.
    pub fn resume(cluster: &mut Cluster, rule: &'a R, tape: RandomTape, states: StateVector) -> Result<Self, SimFault> {
        let n = cluster.config().n;
        if states.vertex.len() != n || states.edges != cluster.current_edges() {
            return Err(SimFault::Argument("states do not match the cluster's edges".into()));
        }
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
        let mut adjacency = vec![Vec::new(); n];
        for (m, edges) in received.into_iter().enumerate() {
            for (u, v) in edges {
                if homes.of(u) == m {
                    adjacency[u as usize].push(v);
                }
                if homes.of(v) == m {
                    adjacency[v as usize].push(u);
                }
            }
        }
        adjacency.par_iter_mut().for_each(|a| a.sort_unstable());
        let words = (0..cluster.machines())
            .map(|m| {
                cluster
                    .homed(m)
                    .map(|v| {
                        let adj = &adjacency[v as usize];
                        1 + adj.len() + adj.iter().filter(|&&u| u > v).count()
                    })
                    .sum()
            })
            .collect();
        cluster.set_resident(ADJACENCY, words)?;
        Ok(DirectSession {
            rule,
            tape,
            states,
            adjacency,
        })
    }

    pub fn states(&self) -> &StateVector {
        &self.states
    }

    pub fn round(&self) -> u64 {
        self.states.round
    }

    pub fn finish(self, cluster: &mut Cluster) -> StateVector {
        cluster.clear_resident(ADJACENCY);
        self.states
    }

    /// Runs `rounds` LOCAL rounds, one MPC round each.
    pub fn advance(&mut self, cluster: &mut Cluster, rounds: u64) -> Result<(), SimFault> {
        for _ in 0..rounds {
            self.step(cluster)?;
        }
        Ok(())
    }

    fn edge_index(&self, e: Edge) -> usize {
        self.states.edges.binary_search(&e).expect("edge known to its owner")
    }

    fn step(&mut self, cluster: &mut Cluster) -> Result<(), SimFault> {
        let homes = cluster.homes();
        let homed: Vec<std::ops::Range<Vertex>> = (0..cluster.machines()).map(|m| cluster.homed(m)).collect();
        let st = &self.states;
        let adjacency = &self.adjacency;
        let received = cluster.run_round(Vec::new(), |m, _: Vec<StateMsg>| {
            let mut send = Vec::new();
            for v in homed[m].clone() {
                let adj = &adjacency[v as usize];
                let mut dests: Vec<usize> = adj.iter().map(|&u| homes.of(u)).filter(|&h| h != m).collect();
                dests.sort_unstable();
                dests.dedup();
                send.extend(dests.into_iter().map(|h| (h, StateMsg::Vertex(v, st.vertex[v as usize]))));
                for &u in adj.iter().filter(|&&u| u > v && homes.of(u) != m) {
                    let e = (v, u);
                    send.push((homes.of(u), StateMsg::Edge(e, st.edge[self.edge_index(e)])));
                }
            }
            Outbox::sending(send)
        })?;
        let r = st.round + 1;
        let rule = self.rule;
        let tape = self.tape;
        type Updates = (Vec<(Vertex, Word)>, Vec<(usize, Word)>);
        let updates: Vec<Updates> = received
            .into_par_iter()
            .enumerate()
            .map(|(m, msgs)| {
                let mut vmap: Vec<(Vertex, Word)> = Vec::new();
                let mut emap: Vec<(Edge, Word)> = Vec::new();
                for msg in msgs {
                    match msg {
                        StateMsg::Vertex(v, s) => vmap.push((v, s)),
                        StateMsg::Edge(e, s) => emap.push((e, s)),
                    }
                }
                vmap.sort_unstable();
                emap.sort_unstable();
                let vertex_state = |u: Vertex| -> Word {
                    if homes.of(u) == m {
                        st.vertex[u as usize]
                    } else {
                        vmap[vmap.binary_search_by_key(&u, |&(x, _)| x).expect("neighbor state delivered")].1
                    }
                };
                let edge_state = |e: Edge| -> Word {
                    if homes.of(e.0) == m {
                        st.edge[self.edge_index(e)]
                    } else {
                        emap[emap.binary_search_by_key(&e, |&(x, _)| x).expect("edge state delivered")].1
                    }
                };
                let mut vout = Vec::new();
                let mut eout = Vec::new();
                let mut incident = Vec::new();
                for v in homed[m].clone() {
                    let adj = &adjacency[v as usize];
                    incident.clear();
                    incident.extend(adj.iter().map(|&u| (u, edge_state(crate::graph::canonical(u, v)))));
                    let sv = st.vertex[v as usize];
                    vout.push((v, rule.vertex(v, sv, &incident, tape.view(v), r)));
                    for &u in adj.iter().filter(|&&u| u > v) {
                        let i = self.edge_index((v, u));
                        eout.push((i, rule.edge(v, sv, u, vertex_state(u), st.edge[i], r)));
                    }
                }
                (vout, eout)
            })
            .collect();
        for (vout, eout) in updates {
            for (v, s) in vout {
                self.states.vertex[v as usize] = s;
            }
            for (i, s) in eout {
                self.states.edge[i] = s;
            }
        }
        self.states.round = r;
        Ok(())
    }
}

/// States after `r` rounds of `rule` on the cluster's current edges.
pub fn simulate_direct<R: LocalRule + ?Sized>(
    cluster: &mut Cluster,
    rule: &R,
    tape: RandomTape,
    r: u64,
) -> Result<StateVector, SimFault> {
    if r == 0 {
        return Ok(StateVector::initial(cluster.config().n, cluster.current_edges()));
    }
    let mut session = DirectSession::start(cluster, rule, tape)?;
    session.advance(cluster, r)?;
    Ok(session.finish(cluster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::local::testing::{naive, Frozen, HashRule};
    use crate::runtime::ClusterConfig;
    use proptest::prelude::*;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 8.0, true).unwrap(), g).unwrap()
    }

    #[test]
    fn zero_rounds_is_initial() {
        let g = generate(Family::Tree { n: 30 }, 2).unwrap();
        let mut c = cluster(&g);
        let s = simulate_direct(&mut c, &HashRule, RandomTape::new(1), 0).unwrap();
        assert_eq!(s, StateVector::of_graph(&g));
        assert_eq!(c.report().rounds_elapsed, 0);
    }

    #[test]
    fn frozen_rule_keeps_states() {
        let g = generate(Family::Grid { rows: 5, cols: 6 }, 0).unwrap();
        let mut c = cluster(&g);
        let s = simulate_direct(&mut c, &Frozen, RandomTape::new(1), 7).unwrap();
        assert_eq!(s.vertex, StateVector::of_graph(&g).vertex);
        assert_eq!(s.edge, StateVector::of_graph(&g).edge);
        assert_eq!(s.round, 7);
    }

    #[test]
    fn one_mpc_round_per_local_round() {
        let g = generate(Family::ForestUnion { n: 300, alpha: 2 }, 4).unwrap();
        let mut c = cluster(&g);
        simulate_direct(&mut c, &HashRule, RandomTape::new(3), 9).unwrap();
        assert_eq!(c.report().rounds_elapsed, 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_naive_simulator(n in 1usize..120, seed in any::<u64>(), r in 0u64..9) {
            let g = generate(Family::ForestUnion { n, alpha: 2 }, seed).unwrap();
            let mut c = cluster(&g);
            let tape = RandomTape::new(seed ^ 0x55);
            let got = simulate_direct(&mut c, &HashRule, tape, r).unwrap();
            prop_assert_eq!(got, naive(&g, &HashRule, tape, r));
        }
    }
}

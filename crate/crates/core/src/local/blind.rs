//! Round compression: replay `t` LOCAL rounds inside collected neighborhoods,
//! then refresh the hosted copies with one push round.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::local::replay::{replay_centers, Hosted};
use crate::local::rule::{pack_edge, LocalRule, RandomTape, StateVector};
use crate::primitives::hops::{Collection, Piece};
use crate::runtime::{Cluster, Outbox, Word, Words};

const HOSTED: &str = "hosted";

/// Rounds replayed per epoch: `floor((eps / 3) * log_delta n)`, at least 1.
pub fn compression_radius(n: usize, delta: usize, epsilon: f64) -> u64 {
    let n = n.max(2) as f64;
    let delta = delta.max(2) as f64;
    ((epsilon / 3.0) * n.ln() / delta.ln()).floor().max(1.0) as u64
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum PushMsg {
    Vertex(Vertex, Word),
    Edge(Edge, Word),
}

impl Words for PushMsg {
    fn words(&self) -> usize {
        match self {
            PushMsg::Vertex(..) => 2,
            PushMsg::Edge(..) => 3,
        }
    }
}

/// Sends every listed item to the homes of `subscribers`, then overwrites the
/// matching hosted copies; one round.
pub(crate) fn push_states(
    cluster: &mut Cluster,
    hosted: &mut [Option<Hosted>],
    outgoing: &[Vec<(Vec<Vertex>, PushMsg)>],
) -> Result<(), SimFault> {
    let homes = cluster.homes();
    let received = cluster.run_round(Vec::new(), |m, _: Vec<PushMsg>| {
        let mut send = Vec::new();
        for (subs, msg) in &outgoing[m] {
            let mut dests: Vec<usize> = subs.iter().map(|&w| homes.of(w)).collect();
            dests.sort_unstable();
            dests.dedup();
            send.extend(dests.into_iter().map(|h| (h, *msg)));
        }
        Outbox::sending(send)
    })?;
    // Each home applies what it received to every center it hosts.
    let homed: Vec<std::ops::Range<Vertex>> = (0..cluster.machines()).map(|m| cluster.homed(m)).collect();
    let mut by_machine: Vec<Vec<&mut Option<Hosted>>> = (0..homed.len()).map(|_| Vec::new()).collect();
    for (v, h) in hosted.iter_mut().enumerate() {
        by_machine[homes.of(v as Vertex)].push(h);
    }
    by_machine
        .into_par_iter()
        .zip(received)
        .for_each(|(centers, msgs)| {
            for h in centers.into_iter().flatten() {
                apply(h, &msgs);
            }
        });
    Ok(())
}

fn apply(h: &mut Hosted, msgs: &[PushMsg]) {
    for msg in msgs {
        match *msg {
            PushMsg::Vertex(v, s) => {
                if let Some(i) = h.vertex_slot(v) {
                    h.vstate[i] = s;
                }
            }
            PushMsg::Edge(e, s) => {
                if let Some(i) = h.edge_slot(e) {
                    h.estate[i] = s;
                }
            }
        }
    }
}

/// Compressed execution over every vertex of the cluster.
pub struct BlindSession<'a, R: LocalRule + ?Sized> {
    rule: &'a R,
    tape: RandomTape,
    t: u64,
    states: StateVector,
    hosted: Vec<Option<Hosted>>,
    subs: Option<Subscriptions>,
    stale: bool,
}

impl<'a, R: LocalRule + ?Sized> BlindSession<'a, R> {
    /// Collects every vertex's reach-`(t - 1)` structure and loads `states` into
    /// the copies. Initial states are known everywhere; any other start pushes
    /// before the first epoch.
    pub fn start(
        cluster: &mut Cluster,
        rule: &'a R,
        tape: RandomTape,
        t: u64,
        budget: usize,
        states: StateVector,
    ) -> Result<Self, SimFault> {
        let n = cluster.config().n;
        if t == 0 {
            return Err(SimFault::Argument("compression radius must be at least 1".into()));
        }
        if states.vertex.len() != n || states.edges != cluster.current_edges() {
            return Err(SimFault::Argument("states do not match the cluster's edges".into()));
        }
        let reach = (t - 1) as usize;
        let (mut coll, first) = Collection::setup(cluster, vec![true; n], budget)?;
        let mut overflow = first.overflow;
        while overflow.is_none() && coll.reach() < reach {
            let r = coll.reach();
            overflow = coll.grow(cluster, (2 * r + 1).min(reach), |_| Piece::Grown)?.overflow;
        }
        if let Some((center, words)) = overflow {
            coll.release(cluster);
            return Err(SimFault::BallOverflow { center, words, budget });
        }
        let hosted: Vec<Option<Hosted>> = (0..n as Vertex)
            .into_par_iter()
            .map(|v| {
                let mut h = Hosted::new(v, coll.grown(v).to_vec());
                for (i, &x) in h.vertices.iter().enumerate() {
                    h.vstate[i] = x as Word;
                }
                for (i, &(a, b)) in h.edges.iter().enumerate() {
                    h.estate[i] = pack_edge(a, b);
                }
                Some(h)
            })
            .collect();
        coll.release(cluster);
        let words = (0..cluster.machines())
            .map(|m| {
                cluster
                    .homed(m)
                    .map(|v| hosted[v as usize].as_ref().map_or(0, Hosted::words))
                    .sum()
            })
            .collect();
        cluster.set_resident(HOSTED, words)?;
        Ok(BlindSession {
            rule,
            tape,
            t,
            // Initial states are known everywhere.
            stale: states.round != 0,
            states,
            hosted,
            subs: None,
        })
    }

    pub fn radius(&self) -> u64 {
        self.t
    }

    pub fn states(&self) -> &StateVector {
        &self.states
    }

    pub fn finish(self, cluster: &mut Cluster) -> StateVector {
        cluster.clear_resident(HOSTED);
        self.states
    }

    /// Runs `rounds` LOCAL rounds in epochs of at most `t`. Every stale epoch
    /// costs one push round; the first push is preceded by one subscription round.
    pub fn advance(&mut self, cluster: &mut Cluster, mut rounds: u64) -> Result<(), SimFault> {
        while rounds > 0 {
            if self.stale {
                if self.subs.is_none() {
                    let homes = cluster.homes();
                    self.subs = Some(subscribe(cluster, &self.hosted, |it| Some(homes.of(it.owner())))?);
                }
                let subs = self.subs.as_ref().expect("subscribed");
                let outgoing = owner_messages(subs, &self.states);
                push_states(cluster, &mut self.hosted, &outgoing)?;
                self.stale = false;
            }
            let len = rounds.min(self.t);
            let mut centers: Vec<Hosted> = self.hosted.iter_mut().map(|h| h.take().expect("hosted")).collect();
            replay_centers(self.rule, self.tape, &mut centers, self.states.round, len);
            for h in &centers {
                self.states.vertex[h.center as usize] = h.center_state;
                let incident = h.edges.iter().filter(|&&(a, b)| a == h.center || b == h.center);
                for (&e, &s) in incident.zip(&h.center_edges) {
                    if e.0 == h.center {
                        let i = self.states.edges.binary_search(&e).expect("owned edge");
                        self.states.edge[i] = s;
                    }
                }
            }
            for (slot, h) in self.hosted.iter_mut().zip(centers) {
                *slot = Some(h);
            }
            self.states.round += len;
            rounds -= len;
            self.stale = true;
        }
        Ok(())
    }
}

/// A state that some hosted structure holds a copy of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Item {
    Vertex(Vertex),
    Edge(Edge),
}

impl Item {
    /// The vertex whose home computes this state.
    pub fn owner(self) -> Vertex {
        match self {
            Item::Vertex(v) => v,
            Item::Edge(e) => e.0,
        }
    }
}

impl Words for (Item, Vertex) {
    fn words(&self) -> usize {
        match self.0 {
            Item::Vertex(_) => 2,
            Item::Edge(_) => 3,
        }
    }
}

/// Per machine: the items whose states it computes, each with the centers holding a copy.
pub(crate) type Subscriptions = Vec<Vec<(Item, Vec<Vertex>)>>;

/// One round: every center tells the machine computing each item of its
/// structure that it holds a copy. `route` names that machine; items it maps
/// to `None` are never refreshed.
pub(crate) fn subscribe<F>(cluster: &mut Cluster, hosted: &[Option<Hosted>], route: F) -> Result<Subscriptions, SimFault>
where
    F: Fn(Item) -> Option<usize> + Sync,
{
    let homed: Vec<std::ops::Range<Vertex>> = (0..cluster.machines()).map(|m| cluster.homed(m)).collect();
    let received = cluster.run_round(Vec::new(), |m, _: Vec<(Item, Vertex)>| {
        let mut send = Vec::new();
        for c in homed[m].clone() {
            let Some(h) = hosted[c as usize].as_ref() else {
                continue;
            };
            let items = h
                .vertices
                .iter()
                .map(|&x| Item::Vertex(x))
                .chain(h.edges.iter().map(|&e| Item::Edge(e)));
            send.extend(items.filter_map(|it| route(it).map(|to| (to, (it, c)))));
        }
        Outbox::sending(send)
    })?;
    Ok(received
        .into_par_iter()
        .map(|mut got| {
            got.sort_unstable();
            let mut list: Vec<(Item, Vec<Vertex>)> = Vec::new();
            for (it, c) in got {
                match list.last_mut() {
                    Some((last, centers)) if *last == it => centers.push(c),
                    _ => list.push((it, vec![c])),
                }
            }
            list
        })
        .collect())
}

/// Each machine's outgoing refresh: the current state of every item it
/// computes, to the centers holding a copy.
pub(crate) fn owner_messages(subs: &Subscriptions, states: &StateVector) -> Vec<Vec<(Vec<Vertex>, PushMsg)>> {
    subs.par_iter()
        .map(|items| {
            items
                .iter()
                .map(|(it, centers)| {
                    let msg = match *it {
                        Item::Vertex(x) => PushMsg::Vertex(x, states.vertex[x as usize]),
                        Item::Edge(e) => {
                            let i = states.edges.binary_search(&e).expect("subscribed edge");
                            PushMsg::Edge(e, states.edge[i])
                        }
                    };
                    (centers.clone(), msg)
                })
                .collect()
        })
        .collect()
}

/// States after `r` rounds, computed by compressed replay with radius `t`.
pub fn blind_coordinate<R: LocalRule + ?Sized>(
    cluster: &mut Cluster,
    rule: &R,
    tape: RandomTape,
    r: u64,
    t: u64,
    budget: usize,
) -> Result<StateVector, SimFault> {
    let initial = StateVector::initial(cluster.config().n, cluster.current_edges());
    if r == 0 {
        return Ok(initial);
    }
    let mut session = BlindSession::start(cluster, rule, tape, t, budget, initial)?;
    session.advance(cluster, r)?;
    Ok(session.finish(cluster))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::local::direct::simulate_direct;
    use crate::local::testing::{naive, HashRule};
    use crate::primitives::hops::default_ball_budget;
    use crate::runtime::ClusterConfig;
    use proptest::prelude::*;

    fn cluster(g: &Graph, c_s: f64) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, c_s, true).unwrap(), g).unwrap()
    }

    #[test]
    fn radius_formula() {
        assert_eq!(compression_radius(1 << 16, 4, 0.5), 1);
        assert_eq!(compression_radius(1 << 30, 2, 0.9), 9);
        assert_eq!(compression_radius(10, 1000, 0.5), 1);
    }

    #[test]
    fn short_runs_need_no_push() {
        let g = generate(Family::Grid { rows: 8, cols: 8 }, 0).unwrap();
        let mut c = cluster(&g, 4096.0);
        let tape = RandomTape::new(5);
        let budget = default_ball_budget(&c);
        let got = blind_coordinate(&mut c, &HashRule, tape, 2, 3, budget).unwrap();
        assert_eq!(got, naive(&g, &HashRule, tape, 2));
        // Setup plus two growth steps (reach 0, 1, 2) of two rounds each; no push.
        assert_eq!(c.report().rounds_elapsed, 5);
    }

    #[test]
    fn four_epochs_on_forest_union() {
        let g = generate(Family::ForestUnion { n: 4096, alpha: 2 }, 11).unwrap();
        let mut c = cluster(&g, 1024.0);
        let tape = RandomTape::new(8);
        let t = 2;
        let budget = default_ball_budget(&c);
        let got = blind_coordinate(&mut c, &HashRule, tape, 4 * t, t, budget).unwrap();
        let rounds = c.report().rounds_elapsed;
        let mut d = cluster(&g, 1024.0);
        assert_eq!(got, simulate_direct(&mut d, &HashRule, tape, 4 * t).unwrap());
        // Collection (setup + one step), one subscription round, three pushes.
        assert_eq!(rounds, 3 + 1 + 3);
    }

    #[test]
    fn resumes_from_midway_states() {
        let g = generate(Family::Tree { n: 200 }, 3).unwrap();
        let tape = RandomTape::new(1);
        let mut c = cluster(&g, 4096.0);
        let mid = simulate_direct(&mut c, &HashRule, tape, 5).unwrap();
        let budget = default_ball_budget(&c);
        let mut s = BlindSession::start(&mut c, &HashRule, tape, 3, budget, mid).unwrap();
        s.advance(&mut c, 7).unwrap();
        assert_eq!(s.finish(&mut c), naive(&g, &HashRule, tape, 12));
    }

    #[test]
    fn overflow_names_a_center() {
        let g = Graph::new(30, (1..30).map(|i| (0, i))).unwrap();
        let mut c = cluster(&g, 8.0);
        let err = blind_coordinate(&mut c, &HashRule, RandomTape::new(0), 3, 1, 20).unwrap_err();
        assert!(matches!(err, SimFault::BallOverflow { center: 0, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn equals_direct(n in 1usize..100, seed in any::<u64>(), t in 1u64..4, r in 0u64..13) {
            let g = generate(Family::ForestUnion { n, alpha: 2 }, seed).unwrap();
            let tape = RandomTape::new(seed.rotate_left(7));
            let mut c = cluster(&g, 65536.0);
            let budget = default_ball_budget(&c);
            let got = blind_coordinate(&mut c, &HashRule, tape, r, t, budget).unwrap();
            let epochs = r.div_ceil(t);
            let steps = if t <= 1 { 0 } else { (t as u64).next_power_of_two().trailing_zeros() as u64 };
            if r > 0 {
                let subscribe = u64::from(epochs > 1);
                prop_assert_eq!(c.report().rounds_elapsed, 1 + 2 * steps + subscribe + epochs - 1);
            }
            let mut d = cluster(&g, 65536.0);
            prop_assert_eq!(got, simulate_direct(&mut d, &HashRule, tape, r).unwrap());
        }
    }
}

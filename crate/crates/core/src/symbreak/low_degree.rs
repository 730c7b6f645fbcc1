//! Finishing once the maximum degree is small: shatter with Luby or
//! Israeli–Itai iterations, then solve every remaining component greedily
//! inside the machine of its smallest vertex.

use serde::{Deserialize, Serialize};

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::hash::mix3;
use crate::local::{DirectSession, LocalRule, RandomTape, StateVector};
use crate::primitives::aggregate::filter_edges;
use crate::primitives::hops::{collect_components, default_ball_budget, Collection, LocalGraph};
use crate::primitives::tree::global_reduce;
use crate::runtime::{Cluster, Outbox, Word};
use crate::symbreak::israeli_itai::{self, decode_matching, IsraeliItaiRule};
use crate::symbreak::luby::{self, decode_mis, LubyRule};
use crate::symbreak::params::Mode;
use crate::symbreak::reduction::CallOutcome;
use crate::symbreak::status::Progress;

const LOW_DEGREE_SALT: u64 = 0x4c4f_5744;
/// Iterations per shattering block, per unit of `log Δ + log log n`.
pub const ITERATION_COEFF: u64 = 2;
/// Blocks retried when the edge count misses its target.
pub const MAX_RESTARTS: u32 = 3;

/// What the low-degree finish did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowDegreeReport {
    pub delta: usize,
    pub iterations: u64,
    pub restarts: u32,
    pub probes: u32,
    pub edges_at_start: u64,
    /// Edges left when the component probe first ran.
    pub edges_after_shatter: u64,
    pub largest_component: usize,
    /// `Δ^4 * log2 n`, the component size the shattering targets.
    pub component_bound: f64,
    /// Whether `Δ <= n^(ε/16)` held.
    pub within_precondition: bool,
    pub rounds: u64,
}

/// Edges in the cluster's shards, known to every machine; `2 * levels` rounds.
pub(crate) fn count_edges(cluster: &mut Cluster) -> Result<u64, SimFault> {
    let per_machine = cluster.shards().iter().map(|s| s.len() as u64).collect();
    global_reduce(cluster, per_machine, |a, b| a + b)
}

/// Drops every edge with an endpoint not in `alive`; `2 * levels` rounds.
pub(crate) fn prune(cluster: &mut Cluster, alive: &[bool]) -> Result<(), SimFault> {
    let vals: Vec<Word> = alive.iter().map(|&a| Word::from(a)).collect();
    filter_edges(cluster, &vals, |_, xu, _, xv| xu == 1 && xv == 1)?;
    Ok(())
}

fn ceil_log2(x: f64) -> u64 {
    x.max(1.0).log2().ceil() as u64
}

/// Iterations per shattering block: `ITERATION_COEFF * (ceil(log2 Δ) + ceil(log2 log2 n))`.
pub fn block_iterations(n: usize, delta: usize) -> u64 {
    let log_n = (n.max(2) as f64).log2();
    (ITERATION_COEFF * (ceil_log2(delta as f64) + ceil_log2(log_n))).max(1)
}

/// Decides every undecided vertex of the cluster's current edge set, whose
/// maximum degree is `delta`. Edges of decided vertices must already be gone.
pub fn solve_low_degree(
    cluster: &mut Cluster,
    delta: usize,
    mode: Mode,
    seed: u64,
    progress: &mut Progress,
) -> Result<LowDegreeReport, SimFault> {
    let tape = RandomTape::new(mix3(seed, LOW_DEGREE_SALT, 0));
    match mode {
        Mode::Mis => solve_with(cluster, &LubyRule, luby::CYCLE, mode, delta, tape, progress, decode_luby),
        Mode::Mm => solve_with(cluster, &IsraeliItaiRule, israeli_itai::CYCLE, mode, delta, tape, progress, decode_ii),
    }
}

fn decode_luby(states: &StateVector, active: &[bool]) -> (CallOutcome, Vec<bool>) {
    let in_mis = decode_mis(states);
    let gone = luby::decided(states);
    let mut joined_flag = vec![false; active.len()];
    for &v in &in_mis {
        joined_flag[v as usize] = true;
    }
    let pick = |want: bool| -> Vec<Vertex> {
        (0..active.len())
            .filter(|&v| active[v] && gone[v] && joined_flag[v] == want)
            .map(|v| v as Vertex)
            .collect()
    };
    let out = CallOutcome {
        joined: pick(true),
        removed: pick(false),
        matched: Vec::new(),
    };
    let alive = (0..active.len()).map(|v| active[v] && !gone[v]).collect();
    (out, alive)
}

fn decode_ii(states: &StateVector, active: &[bool]) -> (CallOutcome, Vec<bool>) {
    let matched = decode_matching(states);
    let mut alive = active.to_vec();
    for &(a, b) in &matched {
        alive[a as usize] = false;
        alive[b as usize] = false;
    }
    let out = CallOutcome {
        matched,
        ..CallOutcome::default()
    };
    (out, alive)
}

fn solve_with<R, D>(
    cluster: &mut Cluster,
    rule: &R,
    cycle: u64,
    mode: Mode,
    delta: usize,
    tape: RandomTape,
    progress: &mut Progress,
    decode: D,
) -> Result<LowDegreeReport, SimFault>
where
    R: LocalRule,
    D: Fn(&StateVector, &[bool]) -> (CallOutcome, Vec<bool>),
{
    let start_rounds = cluster.report().rounds_elapsed;
    let n = cluster.config().n;
    let eps = cluster.config().epsilon;
    let active: Vec<bool> = progress.decided().iter().map(|&d| !d).collect();
    let base = block_iterations(n, delta);
    let cap = 8 * base + 64;
    // Target shrink factor per iteration.
    let rate: f64 = match mode {
        Mode::Mis => 0.5,
        Mode::Mm => 0.8,
    };
    let mut report = LowDegreeReport {
        delta,
        iterations: 0,
        restarts: 0,
        probes: 0,
        edges_at_start: 0,
        edges_after_shatter: 0,
        largest_component: 0,
        component_bound: (delta as f64).powi(4) * (n.max(2) as f64).log2(),
        within_precondition: (delta as f64) <= (n.max(1) as f64).powf(eps / 16.0),
        rounds: 0,
    };
    let m0 = count_edges(cluster)?;
    report.edges_at_start = m0;
    let mut alive = active.clone();
    if m0 > 0 {
        let mut session = DirectSession::start(cluster, rule, tape)?;
        // Shattering: blocks of `base` iterations until the edge count meets its target.
        let mut m_block = m0;
        loop {
            session.advance(cluster, base * cycle)?;
            report.iterations += base;
            alive = decode(session.states(), &active).1;
            prune(cluster, &alive)?;
            let m_now = count_edges(cluster)?;
            let target = (m_block as f64 * rate.powi(base as i32)).floor() as u64;
            if m_now <= target || report.restarts >= MAX_RESTARTS {
                report.edges_after_shatter = m_now;
                break;
            }
            report.restarts += 1;
            m_block = m_now;
        }
        // Probe components; keep iterating while one does not fit.
        let budget = default_ball_budget(cluster);
        let extra = (base / 4).max(1);
        loop {
            report.probes += 1;
            match collect_components(cluster, budget)? {
                Ok(coll) => {
                    let states = session.finish(cluster);
                    let (out, _) = decode(&states, &active);
                    progress.record(&out);
                    let (finished, largest) = finish_components(cluster, &coll, &alive, mode == Mode::Mis)?;
                    coll.release(cluster);
                    progress.record(&finished);
                    report.largest_component = largest;
                    break;
                }
                Err(words) if report.iterations >= cap => {
                    session.finish(cluster);
                    return Err(SimFault::Shattering {
                        words,
                        iterations: report.iterations as usize,
                    });
                }
                Err(_) => {
                    session.advance(cluster, extra * cycle)?;
                    report.iterations += extra;
                    alive = decode(session.states(), &active).1;
                    prune(cluster, &alive)?;
                }
            }
        }
    } else {
        // No edges: every undecided vertex is its own component.
        let joined = if mode == Mode::Mis {
            (0..n).filter(|&v| alive[v]).map(|v| v as Vertex).collect()
        } else {
            Vec::new()
        };
        progress.record(&CallOutcome {
            joined,
            ..CallOutcome::default()
        });
        report.largest_component = usize::from(alive.iter().any(|&a| a));
    }
    report.rounds = cluster.report().rounds_elapsed - start_rounds;
    Ok(report)
}

/// One round: the home of each component's smallest vertex solves it greedily
/// and tells every member's home. Returns the decisions and the largest
/// component's vertex count.
fn finish_components(
    cluster: &mut Cluster,
    coll: &Collection,
    alive: &[bool],
    mis: bool,
) -> Result<(CallOutcome, usize), SimFault> {
    let homes = cluster.homes();
    let homed: Vec<std::ops::Range<Vertex>> = (0..cluster.machines()).map(|m| cluster.homed(m)).collect();
    // Decision per member: 0 joins, 1 is removed, otherwise matched to `d - 2`.
    let received = cluster.run_round(Vec::new(), |m, _: Vec<(Vertex, Word)>| {
        let mut send = Vec::new();
        for v in homed[m].clone() {
            if !alive[v as usize] {
                continue;
            }
            let edges: &[Edge] = coll.grown(v);
            let local = LocalGraph::new(v, edges);
            if local.vertices[0] != v {
                continue;
            }
            for (x, d) in greedy(&local, edges, mis) {
                send.push((homes.of(x), (x, d)));
            }
        }
        Outbox::sending(send)
    })?;
    let mut out = CallOutcome::default();
    for (x, d) in received.into_iter().flatten() {
        match d {
            0 => out.joined.push(x),
            1 => out.removed.push(x),
            p => {
                let p = (p - 2) as Vertex;
                if x < p {
                    out.matched.push((x, p));
                }
            }
        }
    }
    out.joined.sort_unstable();
    out.removed.sort_unstable();
    out.matched.sort_unstable();
    let largest = (0..alive.len())
        .filter(|&v| alive[v])
        .map(|v| LocalGraph::new(v as Vertex, coll.grown(v as Vertex)).vertices.len())
        .max()
        .unwrap_or(0);
    Ok((out, largest))
}

/// Greedy MIS by increasing ID, or greedy matching over sorted edges.
fn greedy(local: &LocalGraph, edges: &[Edge], mis: bool) -> Vec<(Vertex, Word)> {
    let k = local.vertices.len();
    let mut out = Vec::new();
    if mis {
        let mut state = vec![2u8; k];
        for i in 0..k {
            if state[i] == 2 {
                state[i] = 0;
                for &j in local.neighbors(i) {
                    if state[j] == 2 {
                        state[j] = 1;
                    }
                }
            }
        }
        out.extend(local.vertices.iter().zip(state).map(|(&x, s)| (x, Word::from(s))));
    } else {
        let mut taken = vec![false; k];
        for &(a, b) in edges {
            let (i, j) = (local.index(a).unwrap(), local.index(b).unwrap());
            if !taken[i] && !taken[j] {
                taken[i] = true;
                taken[j] = true;
                out.push((a, b as Word + 2));
                out.push((b, a as Word + 2));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::harness::{check_mis, check_mm};
    use crate::runtime::ClusterConfig;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 8.0, true).unwrap(), g).unwrap()
    }

    fn solve(g: &Graph, mode: Mode, seed: u64) -> (Progress, LowDegreeReport) {
        let mut c = cluster(g);
        let mut p = Progress::new(g.n());
        let r = solve_low_degree(&mut c, g.max_degree(), mode, seed, &mut p).unwrap();
        assert_eq!(r.rounds, c.report().rounds_elapsed);
        (p, r)
    }

    /// Keeps edges in order while both endpoints stay below `cap`.
    fn capped(g: &Graph, cap: usize) -> Graph {
        let mut deg = vec![0; g.n()];
        let edges: Vec<Edge> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(u, v)| {
                let ok = deg[u as usize] < cap && deg[v as usize] < cap;
                if ok {
                    deg[u as usize] += 1;
                    deg[v as usize] += 1;
                }
                ok
            })
            .collect();
        Graph::new(g.n(), edges).unwrap()
    }

    #[test]
    fn empty_graph_joins_everyone() {
        let (p, r) = solve(&Graph::empty(7), Mode::Mis, 0);
        assert_eq!(p.mis, (0..7).collect::<Vec<_>>());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn single_edge_matched() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        for seed in 0..5 {
            let (p, _) = solve(&g, Mode::Mm, seed);
            assert_eq!(p.matching, vec![(0, 1)]);
        }
    }

    #[test]
    fn capped_forest_union_both_modes() {
        let g = capped(&generate(Family::ForestUnion { n: 16384, alpha: 3 }, 5).unwrap(), 16);
        assert!(g.max_degree() <= 16);
        for mode in [Mode::Mis, Mode::Mm] {
            let (p, r) = solve(&g, mode, 9);
            let verdict = match mode {
                Mode::Mis => check_mis(&g, &p.mis),
                Mode::Mm => check_mm(&g, &p.matching),
            };
            assert!(verdict.valid, "{mode}: {:?}", verdict.violation);
            // Shattering blocks plus probes stay within a constant number of blocks.
            let block = block_iterations(g.n(), g.max_degree());
            assert!(r.iterations <= 4 * block, "{r:?}");
        }
    }

    #[test]
    fn decided_vertices_are_left_alone() {
        // Vertex 0 already joined; its neighbors were removed and their edges pruned.
        let g = Graph::new(5, [(0, 1), (0, 2), (2, 3), (3, 4)]).unwrap();
        let mut c = cluster(&g);
        let mut p = Progress::new(5);
        p.record(&CallOutcome {
            joined: vec![0],
            removed: vec![1, 2],
            matched: vec![],
        });
        prune(&mut c, &[false, false, false, true, true]).unwrap();
        solve_low_degree(&mut c, 1, Mode::Mis, 3, &mut p).unwrap();
        assert!(check_mis(&g, &p.mis).valid);
        assert_eq!(p.mis.iter().filter(|&&v| v == 0).count(), 1);
    }

    #[test]
    fn tiny_machines_shatter_further() {
        let g = generate(Family::Tree { n: 4096 }, 2).unwrap();
        let (p, r) = solve(&g, Mode::Mis, 4);
        assert!(check_mis(&g, &p.mis).valid);
        assert!(r.probes >= 1);
        assert!(!r.within_precondition);
    }
}

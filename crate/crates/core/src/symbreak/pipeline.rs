//! End-to-end pipelines: coarse degree reduction, repeated square-root
//! reduction, then the low-degree finish.
//!
//! Each reduction window runs one degree-reduction call from fresh states on
//! the live graph, with its own tape. Decided vertices are pruned after every
//! window. Warm-up and optimized runs make the same decisions window by window;
//! they differ only in where states live.

use serde::{Deserialize, Serialize};

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::hash::mix3;
use crate::local::{compression_radius, BlindSession, CenterSession, DirectSession, RandomTape, StateVector};
use crate::primitives::aggregate::{compute_degrees, filter_edges, aggregate_neighbors};
use crate::primitives::hops::{default_ball_budget, Collection, Piece};
use crate::primitives::separable::SeparableFn;
use crate::primitives::tree::global_reduce;
use crate::runtime::{Cluster, Outbox, Word};
use crate::symbreak::low_degree::{prune, solve_low_degree, LowDegreeReport};
use crate::symbreak::params::{DegreeReductionParams, Mode, SpaceMode, Thresholds};
use crate::symbreak::reduction::{decode_calls, degree_reduction_step, CallOutcome, DegreeReductionRule, ROUNDS_PER_CALL};
use crate::symbreak::status::{Progress, Solution, VertexStatus};

const COARSE_SALT: u64 = 0x434f_4152;
const REDUCTION_SALT: u64 = 0x5245_4455;
const PARKED: &str = "parked";

/// A window counts as progress when the high-degree count drops to at most this fraction.
pub const SHRINK: f64 = 0.95;
/// Initial per-center capacity in words.
pub const INITIAL_CAPACITY: usize = 16;
/// `c` in the capacity clamp `c * m / h`.
pub const CAPACITY_COEFF: f64 = 4.0;
/// Largest reach grown for center hosting.
pub const MAX_REACH: usize = 8;
/// Machine occupancy that triggers redistribution of the edge shards.
pub const REDISTRIBUTE_AT: f64 = 0.8;

/// Where a window's LOCAL rounds ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecPath {
    /// Neighborhood aggregation over edge trees.
    Aggregate,
    /// Replay in every vertex's collected neighborhood.
    Blind,
    /// One MPC round per LOCAL round.
    Direct,
    /// Replay hosted at high-degree centers only.
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTrace {
    pub path: ExecPath,
    pub high_before: u64,
    pub high_after: u64,
    /// Reach of the hosted structures; 0 when nothing was hosted.
    pub reach: usize,
    /// Per-center capacity in words; 0 outside optimized hosting.
    pub capacity: usize,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    /// 0 for the coarse phase.
    pub index: usize,
    pub coarse: bool,
    pub delta: usize,
    pub success: bool,
    pub delta_after: usize,
    pub windows: Vec<WindowTrace>,
    pub redistributions: u32,
    pub rounds: u64,
}

impl PhaseTrace {
    pub fn calls(&self) -> usize {
        self.windows.len()
    }

    /// Per-window `ln(h_before / h_after) / ln Δ`, with `h_after` floored at 1.
    pub fn removal_exponents(&self) -> Vec<f64> {
        let ln_delta = (self.delta.max(2) as f64).ln();
        self.windows
            .iter()
            .filter(|w| w.high_before > 0)
            .map(|w| (w.high_before as f64 / w.high_after.max(1) as f64).ln() / ln_delta)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub params: DegreeReductionParams,
    pub space_mode: SpaceMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub solution: Solution,
    pub tau: u64,
    pub delta_initial: usize,
    /// Maximum degree handed to the low-degree finish.
    pub delta_low: usize,
    pub phases: Vec<PhaseTrace>,
    pub low_degree: LowDegreeReport,
    /// Median measured removal exponent over all windows.
    pub delta_hat: Option<f64>,
    pub delta_hat_min: Option<f64>,
}

/// Degrees, maximum degree and the number of vertices of degree at least `high`;
/// `3 * levels` rounds.
pub(crate) fn degree_summary(cluster: &mut Cluster, high: u32) -> Result<(Vec<u32>, usize, u64), SimFault> {
    let deg = compute_degrees(cluster)?;
    // Maximum in the upper half, count in the lower half.
    let per_machine = (0..cluster.machines())
        .map(|m| {
            cluster.homed(m).fold(0u64, |acc, v| {
                let d = deg[v as usize];
                let packed = (d as u64) << 32 | u64::from(d >= high);
                combine_summary(acc, packed)
            })
        })
        .collect();
    let both = global_reduce(cluster, per_machine, combine_summary)?;
    Ok((deg, (both >> 32) as usize, both & 0xffff_ffff))
}

fn combine_summary(a: u64, b: u64) -> u64 {
    ((a >> 32).max(b >> 32)) << 32 | ((a & 0xffff_ffff) + (b & 0xffff_ffff))
}

/// Degree above which states cannot be hosted at a home.
pub fn host_limit(cluster: &Cluster) -> usize {
    cluster.cap() / 32
}

/// Marks every undecided vertex dead when it and all its neighbors have degree
/// below `ceil(sqrt(delta))`; returns the dead flags and current degrees.
/// `4 * levels` rounds.
pub fn mark_dead(cluster: &mut Cluster, delta: usize, progress: &mut Progress) -> Result<(Vec<bool>, Vec<u32>), SimFault> {
    let high = crate::symbreak::params::ceil_sqrt(delta as u64) as u32;
    let deg = compute_degrees(cluster)?;
    let values: Vec<Word> = deg.iter().map(|&d| d as Word).collect();
    let nb_max = aggregate_neighbors(cluster, &values, SeparableFn::Max)?;
    let mut dead = vec![false; deg.len()];
    for v in 0..deg.len() {
        if progress.status[v].is_decided() {
            continue;
        }
        if deg[v] < high && nb_max[v] < high as Word {
            dead[v] = true;
            progress.status[v] = VertexStatus::Dead;
        } else {
            progress.status[v] = VertexStatus::Active;
        }
    }
    Ok((dead, deg))
}

/// One round moving every edge to a hashed machine, when some machine is
/// above `REDISTRIBUTE_AT` of its cap.
fn redistribute_if_crowded(cluster: &mut Cluster, salt: u64) -> Result<bool, SimFault> {
    let cap = cluster.cap() as f64;
    let crowded = (0..cluster.machines()).any(|m| cluster.resident_words(m) as f64 > REDISTRIBUTE_AT * cap);
    if !crowded {
        return Ok(false);
    }
    let placed: Vec<Vec<(usize, Edge)>> = cluster
        .shards()
        .iter()
        .map(|s| s.iter().map(|&(u, v)| (cluster.place((u as u64) << 32 | v as u64, salt), (u, v))).collect())
        .collect();
    let received = cluster.run_round(Vec::new(), |m, _: Vec<Edge>| Outbox::sending(placed[m].clone()))?;
    cluster.replace_shards(received)?;
    Ok(true)
}

/// Per-phase state of optimized hosting.
struct Hosting {
    coll: Option<Collection>,
    capacity: usize,
    last_high: Option<u64>,
    redistributions: u32,
}

impl Hosting {
    fn new() -> Self {
        Hosting {
            coll: None,
            capacity: INITIAL_CAPACITY,
            last_high: None,
            redistributions: 0,
        }
    }

    /// `s = min(max(s, s * h_prev / h), c * m / h, ball budget)`.
    fn update_capacity(&mut self, high: u64, m: usize, limit: usize) -> usize {
        let h = high.max(1) as f64;
        let grown = match self.last_high {
            Some(prev) if prev > high => (self.capacity as f64 * prev as f64 / h).floor() as usize,
            _ => self.capacity,
        };
        let clamp = (CAPACITY_COEFF * m.max(1) as f64 / h).floor() as usize;
        self.capacity = grown.max(self.capacity).min(clamp).min(limit).max(1);
        self.last_high = Some(high);
        self.capacity
    }

    fn release(self, cluster: &mut Cluster) {
        if let Some(c) = self.coll {
            c.release(cluster);
        }
    }
}

/// Runs up to `c * log_Δ n + c` degree-reduction calls at threshold `delta`.
/// Success means no vertex of degree at least `ceil(sqrt(delta))` remains;
/// failure means the high-degree count stalled for two consecutive calls or
/// the call budget ran out.
pub fn reduce_to_sqrt(
    cluster: &mut Cluster,
    delta: usize,
    params: &DegreeReductionParams,
    space_mode: SpaceMode,
    seed: u64,
    index: usize,
    progress: &mut Progress,
) -> Result<PhaseTrace, SimFault> {
    if delta < 2 {
        return Err(SimFault::Argument(format!("reduce_to_sqrt needs delta >= 2, got {delta}")));
    }
    let start = cluster.report().rounds_elapsed;
    let n = cluster.config().n;
    let th = params.thresholds(delta);
    let mode = params.mode;
    let (_, mut max_deg, mut high) = degree_summary(cluster, th.high)?;
    let log_delta_n = ((n.max(2) as f64).ln() / (delta as f64).ln()).ceil() as usize;
    let max_calls = 8 * log_delta_n + 8;
    let mut windows = Vec::new();
    let mut stall = 0;
    let mut hosting = (space_mode == SpaceMode::Optimized).then(Hosting::new);
    let m0 = cluster.shards().iter().map(Vec::len).sum::<usize>();
    while high > 0 && windows.len() < max_calls && stall < 2 {
        let before = cluster.report().rounds_elapsed;
        let tape = RandomTape::new(mix3(seed, REDUCTION_SALT + index as u64, windows.len() as u64));
        let (path, reach, capacity) = match hosting.as_mut() {
            _ if delta > host_limit(cluster) => {
                let out = degree_reduction_step(cluster, &th, mode, tape, 0)?;
                progress.record(&out);
                (ExecPath::Aggregate, 0, 0)
            }
            None => blind_window(cluster, &th, mode, tape, progress)?,
            Some(h) => hosted_window(cluster, &th, mode, tape, progress, h, high, m0)?,
        };
        let (_, d, now) = degree_summary(cluster, th.high)?;
        windows.push(WindowTrace {
            path,
            high_before: high,
            high_after: now,
            reach,
            capacity,
            rounds: cluster.report().rounds_elapsed - before,
        });
        if now as f64 > SHRINK * high as f64 {
            stall += 1;
        } else {
            stall = 0;
        }
        high = now;
        max_deg = d;
    }
    let redistributions = hosting.as_ref().map_or(0, |h| h.redistributions);
    if let Some(h) = hosting {
        h.release(cluster);
    }
    Ok(PhaseTrace {
        index,
        coarse: false,
        delta,
        success: high == 0,
        delta_after: max_deg,
        windows,
        redistributions,
        rounds: cluster.report().rounds_elapsed - start,
    })
}

/// Decisions of one call run as LOCAL rounds, from states the caller produced.
fn finish_window(cluster: &mut Cluster, states: &StateVector, progress: &mut Progress) -> Result<CallOutcome, SimFault> {
    let out = decode_calls(states);
    progress.record(&out);
    prune(cluster, &alive(progress))?;
    Ok(out)
}

fn alive(progress: &Progress) -> Vec<bool> {
    progress.decided().iter().map(|&d| !d).collect()
}

/// Warm-up window: compressed replay in every vertex's neighborhood.
fn blind_window(
    cluster: &mut Cluster,
    th: &Thresholds,
    mode: Mode,
    tape: RandomTape,
    progress: &mut Progress,
) -> Result<(ExecPath, usize, usize), SimFault> {
    let rule = DegreeReductionRule::new(*th, mode);
    let n = cluster.config().n;
    let t = compression_radius(n, th.delta, cluster.config().epsilon);
    let initial = StateVector::initial(n, cluster.current_edges());
    let one_hop_budget = cluster.cap() / 8;
    let session = if t > 1 {
        let budget = default_ball_budget(cluster);
        match BlindSession::start(cluster, &rule, tape, t, budget, initial.clone()) {
            Err(SimFault::BallOverflow { .. }) => None,
            other => Some(other?),
        }
    } else {
        None
    };
    let mut session = match session {
        Some(s) => s,
        None => BlindSession::start(cluster, &rule, tape, 1, one_hop_budget, initial)?,
    };
    let reach = session.radius() as usize - 1;
    session.advance(cluster, ROUNDS_PER_CALL)?;
    let states = session.finish(cluster);
    finish_window(cluster, &states, progress)?;
    Ok((ExecPath::Blind, reach, 0))
}

/// Optimized window: dead vertices are parked, high-degree centers host
/// growing neighborhoods, and other vertices read their states from an
/// adjacent center.
#[allow(clippy::too_many_arguments)]
fn hosted_window(
    cluster: &mut Cluster,
    th: &Thresholds,
    mode: Mode,
    tape: RandomTape,
    progress: &mut Progress,
    hosting: &mut Hosting,
    high_count: u64,
    m0: usize,
) -> Result<(ExecPath, usize, usize), SimFault> {
    let n = cluster.config().n;
    let (dead, deg) = mark_dead(cluster, th.delta, progress)?;
    let high: Vec<bool> = deg.iter().map(|&d| d >= th.high).collect();

    // Park edges of dead vertices: dead vertices have no high neighbor, so
    // nothing they hold is read by the call except removal by a joining neighbor.
    let flags: Vec<Word> = dead.iter().map(|&d| Word::from(d)).collect();
    let parked = filter_edges(cluster, &flags, |_, xu, _, xv| xu == 0 && xv == 0)?;
    cluster.set_resident(PARKED, parked.iter().map(|p| 2 * p.len()).collect())?;

    let capacity = hosting.update_capacity(high_count, m0, default_ball_budget(cluster));
    let remains: Vec<bool> = (0..n).map(|v| !dead[v] && !progress.is_decided(v as Vertex)).collect();
    let untrack: Vec<bool> = high.iter().map(|&h| !h).collect();
    match hosting.coll.as_mut() {
        Some(coll) => {
            coll.refresh(cluster, &remains, &untrack)?;
            coll.set_budget(capacity);
        }
        None => {
            let (coll, first) = Collection::setup(cluster, high.clone(), capacity)?;
            if first.overflow.is_some() {
                coll.release(cluster);
            } else {
                hosting.coll = Some(coll);
            }
        }
    }
    if let Some(coll) = hosting.coll.as_mut() {
        let r = coll.reach();
        if r < MAX_REACH {
            // Centers' reach-R structures cover every member within R + 1, so
            // merging them reaches 2R - 1; below R = 2 grow one hop at a time.
            let target = if r >= 2 { (2 * r - 1).min(MAX_REACH) } else { r + 1 };
            let snapshot = coll.clone();
            if coll.grow(cluster, target, |_| Piece::Grown)?.overflow.is_some() {
                *coll = snapshot;
            }
        }
    }

    let rule = DegreeReductionRule::new(*th, mode);
    let reach = hosting.coll.as_ref().map_or(0, Collection::reach);
    let (states, path) = if reach >= 2 {
        let coll = hosting.coll.as_ref().expect("hosting");
        let authority = authorities(cluster, &high, &remains)?;
        let structures = (0..n as Vertex)
            .map(|v| high[v as usize].then(|| coll.grown(v).to_vec()))
            .collect();
        let mut session = CenterSession::start(cluster, &rule, tape, reach as u64, structures, authority)?;
        session.advance(cluster, ROUNDS_PER_CALL)?;
        (session.finish(cluster), ExecPath::Centered)
    } else {
        let mut session = DirectSession::start(cluster, &rule, tape)?;
        session.advance(cluster, ROUNDS_PER_CALL)?;
        (session.finish(cluster), ExecPath::Direct)
    };
    let out = decode_calls(&states);
    progress.record(&out);

    // Unpark; parked edges never left their machines.
    cluster.clear_resident(PARKED);
    let mut shards = cluster.shards().to_vec();
    for (s, p) in shards.iter_mut().zip(parked) {
        s.extend(p);
        s.sort_unstable();
    }
    cluster.replace_shards(shards)?;
    progress.revive();
    if mode == Mode::Mis && !out.joined.is_empty() {
        remove_dead_neighbors(cluster, &out.joined, progress)?;
    }
    prune(cluster, &alive(progress))?;
    if redistribute_if_crowded(cluster, u64::from(hosting.redistributions))? {
        hosting.redistributions += 1;
    }
    Ok((path, reach, capacity))
}

/// High vertices are their own authority; every other remaining vertex uses
/// its smallest high neighbor. `3 * levels` rounds.
fn authorities(cluster: &mut Cluster, high: &[bool], remains: &[bool]) -> Result<Vec<Option<Vertex>>, SimFault> {
    let values: Vec<Word> = (0..high.len())
        .map(|v| if high[v] && remains[v] { v as Word } else { Word::MAX })
        .collect();
    let nearest = aggregate_neighbors(cluster, &values, SeparableFn::Min)?;
    Ok((0..high.len())
        .map(|v| match (remains[v], high[v]) {
            (false, _) => None,
            (true, true) => Some(v as Vertex),
            (true, false) => (nearest[v] != Word::MAX).then_some(nearest[v] as Vertex),
        })
        .collect())
}

/// Removes undecided neighbors of `joined`, which were parked during the call.
fn remove_dead_neighbors(cluster: &mut Cluster, joined: &[Vertex], progress: &mut Progress) -> Result<(), SimFault> {
    let n = progress.n();
    let mut flags = vec![0; n];
    for &v in joined {
        flags[v as usize] = 1;
    }
    let hit = aggregate_neighbors(cluster, &flags, SeparableFn::Max)?;
    let removed: Vec<Vertex> = (0..n as Vertex)
        .filter(|&v| hit[v as usize] == 1 && !progress.is_decided(v))
        .collect();
    progress.record(&CallOutcome {
        removed,
        ..CallOutcome::default()
    });
    Ok(())
}

/// Aggregation calls at the current maximum degree until it is at most
/// `host_limit`, a call leaves it unchanged twice in a row, or
/// `2 * ceil(1 / ε) + 8` calls ran.
pub fn coarse_degree_reduction(
    cluster: &mut Cluster,
    params: &DegreeReductionParams,
    seed: u64,
    progress: &mut Progress,
) -> Result<PhaseTrace, SimFault> {
    let start = cluster.report().rounds_elapsed;
    let limit = host_limit(cluster);
    let max_calls = 2 * (1.0 / cluster.config().epsilon).ceil() as usize + 8;
    let (_, delta0, _) = degree_summary(cluster, u32::MAX)?;
    let mut delta = delta0;
    let mut windows = Vec::new();
    let mut stall = 0;
    while delta > limit && windows.len() < max_calls && stall < 2 {
        let before = cluster.report().rounds_elapsed;
        let th = params.thresholds(delta);
        let (_, _, high) = degree_summary(cluster, th.high)?;
        let tape = RandomTape::new(mix3(seed, COARSE_SALT, windows.len() as u64));
        let out = degree_reduction_step(cluster, &th, params.mode, tape, 0)?;
        progress.record(&out);
        let (_, d, now) = degree_summary(cluster, th.high)?;
        windows.push(WindowTrace {
            path: ExecPath::Aggregate,
            high_before: high,
            high_after: now,
            reach: 0,
            capacity: 0,
            rounds: cluster.report().rounds_elapsed - before,
        });
        stall = if d < delta { 0 } else { stall + 1 };
        delta = d;
    }
    Ok(PhaseTrace {
        index: 0,
        coarse: true,
        delta: delta0,
        success: delta <= limit,
        delta_after: delta,
        windows,
        redistributions: 0,
        rounds: cluster.report().rounds_elapsed - start,
    })
}

/// Coarse reduction, square-root phases while `Δ > τ`, then the low-degree
/// finish. The solution is the union of every stage's decisions.
pub fn run_pipeline(cluster: &mut Cluster, config: &PipelineConfig) -> Result<PipelineRun, SimFault> {
    let n = cluster.config().n;
    let params = &config.params;
    let mut progress = Progress::new(n);
    let tau = params.tau(n);
    let coarse = coarse_degree_reduction(cluster, params, config.seed, &mut progress)?;
    let delta_initial = coarse.delta;
    let mut delta = coarse.delta_after;
    let mut phases = vec![coarse];
    while delta as u64 > tau && delta >= 2 {
        let trace = reduce_to_sqrt(
            cluster,
            delta,
            params,
            config.space_mode,
            config.seed,
            phases.len(),
            &mut progress,
        )?;
        let ok = trace.success;
        delta = trace.delta_after;
        phases.push(trace);
        if !ok {
            break;
        }
    }
    let low_degree = solve_low_degree(cluster, delta, params.mode, config.seed, &mut progress)?;
    let mut samples: Vec<f64> = phases.iter().flat_map(PhaseTrace::removal_exponents).collect();
    samples.sort_by(f64::total_cmp);
    Ok(PipelineRun {
        solution: progress.into_solution(params.mode),
        tau,
        delta_initial,
        delta_low: delta,
        phases,
        low_degree,
        delta_hat: samples.get(samples.len() / 2).copied(),
        delta_hat_min: samples.first().copied(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, Graph};
    use crate::harness::{check_mis, check_mm};
    use crate::runtime::ClusterConfig;
    use crate::symbreak::params::Fidelity;

    fn cluster(g: &Graph) -> Cluster {
        Cluster::init(ClusterConfig::for_graph(g, 0.5, 8.0, true).unwrap(), g).unwrap()
    }

    fn star(k: u32) -> Graph {
        Graph::new(k as usize + 1, (1..=k).map(|i| (0, i))).unwrap()
    }

    fn desk(mode: Mode) -> DegreeReductionParams {
        DegreeReductionParams::new(mode, Fidelity::Desk)
    }

    fn valid(g: &Graph, s: &Solution) -> bool {
        match s.kind {
            Mode::Mis => check_mis(g, &s.mis).valid,
            Mode::Mm => check_mm(g, &s.matching).valid,
        }
    }

    fn run(g: &Graph, params: DegreeReductionParams, space_mode: SpaceMode, seed: u64) -> (PipelineRun, Cluster) {
        run_at(g, params, space_mode, seed, 8.0)
    }

    fn run_at(g: &Graph, params: DegreeReductionParams, space_mode: SpaceMode, seed: u64, space_coeff: f64) -> (PipelineRun, Cluster) {
        let mut c = Cluster::init(ClusterConfig::for_graph(g, 0.5, space_coeff, true).unwrap(), g).unwrap();
        let cfg = PipelineConfig { params, space_mode, seed };
        let r = run_pipeline(&mut c, &cfg).unwrap();
        (r, c)
    }

    #[test]
    fn dead_when_everything_is_low() {
        let g = generate(Family::Grid { rows: 6, cols: 6 }, 0).unwrap();
        let mut c = cluster(&g);
        let mut p = Progress::new(g.n());
        let (dead, _) = mark_dead(&mut c, 100, &mut p).unwrap();
        assert!(dead.iter().all(|&d| d));
        assert!(p.status.iter().all(|&s| s == VertexStatus::Dead));
    }

    #[test]
    fn star_leaves_live_until_hub_leaves() {
        let g = star(20);
        let mut c = cluster(&g);
        let mut p = Progress::new(g.n());
        let (dead, _) = mark_dead(&mut c, 20, &mut p).unwrap();
        assert!(!dead.iter().any(|&d| d));
        p.record(&CallOutcome {
            joined: vec![0],
            ..CallOutcome::default()
        });
        prune(&mut c, &alive(&p)).unwrap();
        let (dead, _) = mark_dead(&mut c, 20, &mut p).unwrap();
        assert!(!dead[0]);
        assert!(dead[1..].iter().all(|&d| d));
    }

    #[test]
    fn already_low_succeeds_without_calls() {
        let g = generate(Family::Tree { n: 500 }, 1).unwrap();
        let mut c = cluster(&g);
        let mut p = Progress::new(g.n());
        let t = reduce_to_sqrt(&mut c, 400, &desk(Mode::Mis), SpaceMode::Warmup, 0, 1, &mut p).unwrap();
        assert!(t.success);
        assert_eq!(t.calls(), 0);
    }

    #[test]
    fn clique_core_fails() {
        let n = 64u32;
        let g = Graph::new(n as usize, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap();
        let params = desk(Mode::Mis).with_tau(100);
        assert!(params.tau(g.n()) > 64);
        let mut c = cluster(&g);
        let mut p = Progress::new(g.n());
        let t = reduce_to_sqrt(&mut c, 63, &params, SpaceMode::Warmup, 0, 1, &mut p).unwrap();
        assert!(!t.success);
        assert_eq!(t.calls(), 2);
    }

    #[test]
    fn forest_union_reduces_to_sqrt() {
        let g = generate(Family::ForestUnion { n: 8192, alpha: 2 }, 3).unwrap();
        let delta = g.max_degree();
        for mode in [Mode::Mis, Mode::Mm] {
            let mut c = cluster(&g);
            let mut p = Progress::new(g.n());
            let t = reduce_to_sqrt(&mut c, delta, &desk(mode), SpaceMode::Warmup, 7, 1, &mut p).unwrap();
            assert!(t.success, "{mode}: {t:?}");
            let h = crate::symbreak::params::ceil_sqrt(delta as u64) as u32;
            let deg = compute_degrees(&mut c).unwrap();
            assert!(deg.iter().all(|&d| d < h));
            for v in 0..g.n() {
                let nb = g.neighbors(v as Vertex);
                let in_mis = |u: &Vertex| p.status[*u as usize] == VertexStatus::InMis;
                match (mode, p.status[v]) {
                    (Mode::Mm, st) => {
                        let hits = p.matching.iter().filter(|e| e.0 == v as Vertex || e.1 == v as Vertex).count();
                        assert_eq!(hits, usize::from(st == VertexStatus::Matched), "vertex {v}");
                    }
                    (Mode::Mis, VertexStatus::InMis) => assert!(!nb.iter().any(in_mis), "vertex {v}"),
                    (Mode::Mis, VertexStatus::RemovedByMisNeighbor) => assert!(nb.iter().any(in_mis), "vertex {v}"),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn coarse_removes_the_hub() {
        let g = star(4095);
        for mode in [Mode::Mis, Mode::Mm] {
            let mut c = cluster(&g);
            let mut p = Progress::new(g.n());
            let t = coarse_degree_reduction(&mut c, &desk(mode), 1, &mut p).unwrap();
            assert!(p.is_decided(0), "{mode}");
            assert!(t.success);
            assert!(t.delta_after <= host_limit(&c));
            assert!(t.calls() <= 2 * 2 + 8);
        }
    }

    #[test]
    fn sparse_input_skips_coarse() {
        let g = generate(Family::Grid { rows: 20, cols: 20 }, 0).unwrap();
        let mut c = cluster(&g);
        let mut p = Progress::new(g.n());
        let t = coarse_degree_reduction(&mut c, &desk(Mode::Mis), 1, &mut p).unwrap();
        assert_eq!(t.calls(), 0);
        assert_eq!(c.current_edges(), g.edges());
    }

    #[test]
    fn empty_graph_pipeline() {
        let g = Graph::empty(10);
        let (r, _) = run(&g, desk(Mode::Mis), SpaceMode::Warmup, 0);
        assert_eq!(r.solution.mis.len(), 10);
        assert_eq!(r.phases.len(), 1);
        assert_eq!(r.phases[0].calls(), 0);
    }

    #[test]
    fn random_tree_warmup() {
        let n = 1 << 16;
        let g = generate(Family::Tree { n }, 12).unwrap();
        let (r, _) = run(&g, desk(Mode::Mis), SpaceMode::Warmup, 2);
        assert!(valid(&g, &r.solution));
        let loglog = (n as f64).log2().log2().ceil() as usize;
        assert!(r.phases.len() - 1 <= loglog + 1);
    }

    #[test]
    fn optimized_equals_warmup() {
        let graphs = [
            generate(Family::ForestUnion { n: 3000, alpha: 3 }, 1).unwrap(),
            generate(Family::ForestUnion { n: 4000, alpha: 2 }, 1).unwrap(),
            generate(Family::Gnm { n: 2000, m: 12000 }, 2).unwrap(),
            star(3000),
            generate(Family::Tree { n: 4000 }, 3).unwrap(),
        ];
        let mut centered = 0;
        for g in &graphs {
            for mode in [Mode::Mis, Mode::Mm] {
                let params = desk(mode).with_tau(2);
                let (warm, _) = run_at(g, params.clone(), SpaceMode::Warmup, 5, 64.0);
                let (opt, c) = run_at(g, params, SpaceMode::Optimized, 5, 64.0);
                assert!(valid(g, &warm.solution), "{mode}");
                assert_eq!(warm.solution, opt.solution, "{mode}");
                centered += opt.phases.iter().flat_map(|p| &p.windows).filter(|w| w.path == ExecPath::Centered).count();
                let m = g.m().max(1) as f64;
                let log = (g.n() as f64).log2();
                assert!((c.report().peak_total_space as f64) <= 8.0 * m * log * log);
            }
        }
        assert!(centered > 0);
    }
}


//! The simulated deployment: machines with a fixed word budget exchanging
//! messages in synchronous rounds.
//!
//! Every primitive in this crate talks to the cluster through [`Cluster::run_round`].
//! Data that outlives a single primitive (edge shards, per-vertex tables, hosted
//! balls) is registered as *resident* under a tag so it is charged at every
//! barrier alongside the round's working set.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Cap, SimFault};
use crate::graph::{Edge, Graph, Vertex};
use crate::hash::mix64;

/// The payload unit: one vertex ID, one state, or one tape chunk.
pub type Word = u64;

/// Word cost of a stored or transmitted item.
pub trait Words {
    fn words(&self) -> usize;
}

impl Words for Word {
    fn words(&self) -> usize {
        1
    }
}

impl<A: Words, B: Words> Words for (A, B) {
    fn words(&self) -> usize {
        self.0.words() + self.1.words()
    }
}

impl Words for Vertex {
    fn words(&self) -> usize {
        1
    }
}

impl<T: Words> Words for Vec<T> {
    fn words(&self) -> usize {
        self.iter().map(Words::words).sum()
    }
}

/// Floor on per-machine space so constant-size per-vertex records fit on tiny inputs.
pub const MIN_MACHINE_SPACE: usize = 256;

/// Environment switch for strict cap enforcement.
pub const STRICT_ENV: &str = "MPCSIM_STRICT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub n: usize,
    pub epsilon: f64,
    pub space_coefficient: f64,
    /// Words per machine, `ceil(c_s * n^epsilon)` with a floor of [`MIN_MACHINE_SPACE`].
    pub machine_space: usize,
    pub machine_count: usize,
    /// Vertices each machine is responsible for.
    pub vertices_per_home: usize,
    /// Multiplier applied to every cap; 1.0 in strict mode.
    pub slack: f64,
    pub strict: bool,
}

impl ClusterConfig {
    /// Sizes a deployment for `g`: space from `(epsilon, c_s)`, and enough
    /// machines that every vertex home and edge shard has headroom.
    pub fn for_graph(
        g: &Graph,
        epsilon: f64,
        space_coefficient: f64,
        strict: bool,
    ) -> Result<Self, SimFault> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(SimFault::Argument(format!("epsilon {epsilon} not in (0,1)")));
        }
        if !(space_coefficient > 0.0) {
            return Err(SimFault::Argument("space coefficient must be positive".into()));
        }
        let n = g.n();
        let s = ((space_coefficient * (n.max(1) as f64).powf(epsilon)).ceil() as usize)
            .max(MIN_MACHINE_SPACE);
        // One vertex per home keeps hop-collection fan-out within a machine.
        let per_home = 1;
        // Shards fill at most 1/32 of a machine so hashed tree nodes stay well under the cap.
        let for_edges = (64 * g.m()).div_ceil(s);
        let machines = n.max(for_edges).max(2);
        Ok(ClusterConfig {
            n,
            epsilon,
            space_coefficient,
            machine_space: s,
            machine_count: machines,
            vertices_per_home: per_home,
            slack: if strict { 1.0 } else { amortized_slack(n) },
            strict,
        })
    }

    /// A fully specified deployment, mainly for tests.
    pub fn explicit(n: usize, machine_space: usize, machine_count: usize) -> Self {
        let machine_count = machine_count.max(1);
        ClusterConfig {
            n,
            epsilon: 0.5,
            space_coefficient: 1.0,
            machine_space,
            machine_count,
            vertices_per_home: n.div_ceil(machine_count).max(1),
            slack: 1.0,
            strict: true,
        }
    }

    /// Reads `MPCSIM_STRICT`; anything other than `0` means strict.
    pub fn strict_from_env() -> bool {
        std::env::var(STRICT_ENV).map(|v| v.trim() != "0").unwrap_or(true)
    }

    pub fn with_strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self.slack = if strict { 1.0 } else { amortized_slack(self.n) };
        self
    }

    /// The enforced per-machine limit for storage and for traffic in each direction.
    pub fn cap(&self) -> usize {
        (self.machine_space as f64 * self.slack).floor() as usize
    }

    pub fn total_space_budget(&self) -> usize {
        self.machine_space * self.machine_count
    }

    pub fn log2_n(&self) -> f64 {
        (self.n.max(2) as f64).log2()
    }
}

fn amortized_slack(n: usize) -> f64 {
    (n.max(2) as f64).log2().max(1.0)
}

/// Round and space counters. All peaks are monotone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMeter {
    pub rounds_elapsed: u64,
    pub peak_machine_space: usize,
    pub peak_machine_traffic: usize,
    pub total_space_now: usize,
    pub peak_total_space: usize,
}

/// What a machine keeps and what it sends at the end of its local step.
pub struct Outbox<T> {
    pub keep: Vec<T>,
    pub send: Vec<(usize, T)>,
}

impl<T> Outbox<T> {
    pub fn new() -> Self {
        Outbox {
            keep: Vec::new(),
            send: Vec::new(),
        }
    }

    pub fn sending(send: Vec<(usize, T)>) -> Self {
        Outbox {
            keep: Vec::new(),
            send,
        }
    }
}

impl<T> Default for Outbox<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// The published vertex-to-machine responsibility map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Homes {
    per_home: usize,
}

impl Homes {
    #[inline]
    pub fn of(&self, v: Vertex) -> usize {
        v as usize / self.per_home
    }
}

pub struct Cluster {
    config: ClusterConfig,
    shards: Vec<Vec<Edge>>,
    resident: BTreeMap<&'static str, Vec<usize>>,
    resident_total: Vec<usize>,
    meter: RoundMeter,
    trace: Option<Vec<Vec<usize>>>,
}

const EDGES: &str = "edges";

impl Cluster {
    /// Places the edges of `g` round-robin over the machines.
    pub fn init(config: ClusterConfig, g: &Graph) -> Result<Self, SimFault> {
        let machines = config.machine_count;
        let needed = 2 * g.m();
        if needed > config.total_space_budget() {
            return Err(SimFault::Capacity {
                needed,
                machines,
                space: config.machine_space,
            });
        }
        if config.vertices_per_home * machines < g.n() {
            return Err(SimFault::Argument(format!(
                "{} machines with {} vertices each cannot host {} vertices",
                machines,
                config.vertices_per_home,
                g.n()
            )));
        }
        let mut shards = vec![Vec::new(); machines];
        for (i, &e) in g.edges().iter().enumerate() {
            shards[i % machines].push(e);
        }
        let mut cluster = Cluster {
            config,
            shards: Vec::new(),
            resident: BTreeMap::new(),
            resident_total: vec![0; machines],
            meter: RoundMeter::default(),
            trace: None,
        };
        cluster.replace_shards(shards)?;
        Ok(cluster)
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn machines(&self) -> usize {
        self.config.machine_count
    }

    pub fn cap(&self) -> usize {
        self.config.cap()
    }

    /// Records per-machine storage at every barrier, for auditing the meters.
    pub fn enable_trace(&mut self) {
        self.trace = Some(vec![self.resident_total.clone()]);
    }

    pub fn trace(&self) -> Option<&[Vec<usize>]> {
        self.trace.as_deref()
    }

    pub fn report(&self) -> RoundMeter {
        self.meter.clone()
    }

    /// The machine responsible for vertex `v`.
    #[inline]
    pub fn home(&self, v: Vertex) -> usize {
        self.homes().of(v)
    }

    pub fn homes(&self) -> Homes {
        Homes {
            per_home: self.config.vertices_per_home,
        }
    }

    /// The vertices machine `machine` is responsible for.
    pub fn homed(&self, machine: usize) -> Range<Vertex> {
        let k = self.config.vertices_per_home;
        let lo = (machine * k).min(self.config.n);
        let hi = ((machine + 1) * k).min(self.config.n);
        lo as Vertex..hi as Vertex
    }

    /// Pseudorandom machine for a key; the salt separates independent uses.
    #[inline]
    pub fn place(&self, key: u64, salt: u64) -> usize {
        (mix64(key ^ mix64(salt)) % self.config.machine_count as u64) as usize
    }

    pub fn shards(&self) -> &[Vec<Edge>] {
        &self.shards
    }

    /// The edges still present in the simulated graph, in canonical order.
    pub fn current_edges(&self) -> Vec<Edge> {
        let mut all: Vec<Edge> = self.shards.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn replace_shards(&mut self, shards: Vec<Vec<Edge>>) -> Result<(), SimFault> {
        assert_eq!(shards.len(), self.machines());
        let words = shards.iter().map(|s| 2 * s.len()).collect();
        self.shards = shards;
        self.set_resident(EDGES, words)
    }

    /// Registers long-lived data; checked immediately against the space cap.
    pub fn set_resident(&mut self, tag: &'static str, words: Vec<usize>) -> Result<(), SimFault> {
        assert_eq!(words.len(), self.machines());
        let old = self
            .resident
            .insert(tag, words)
            .unwrap_or_else(|| vec![0; self.machines()]);
        let new = &self.resident[tag];
        for i in 0..self.machines() {
            self.resident_total[i] = self.resident_total[i] - old[i] + new[i];
        }
        let cap = self.cap();
        if let Some((machine, &words)) = self
            .resident_total
            .iter()
            .enumerate()
            .find(|(_, &w)| w > cap)
        {
            return Err(SimFault::Overflow {
                round: self.meter.rounds_elapsed,
                machine,
                cap: Cap::Space,
                words,
                limit: cap,
            });
        }
        let stored = self.resident_total.clone();
        self.observe_storage(&stored);
        Ok(())
    }

    pub fn clear_resident(&mut self, tag: &'static str) {
        if let Some(old) = self.resident.remove(tag) {
            for (total, w) in self.resident_total.iter_mut().zip(old) {
                *total -= w;
            }
            self.meter.total_space_now = self.resident_total.iter().sum();
        }
    }

    pub fn resident_words(&self, machine: usize) -> usize {
        self.resident_total[machine]
    }

    fn observe_storage(&mut self, stored: &[usize]) {
        let total: usize = stored.iter().sum();
        let peak = stored.iter().copied().max().unwrap_or(0);
        self.meter.total_space_now = total;
        self.meter.peak_total_space = self.meter.peak_total_space.max(total);
        self.meter.peak_machine_space = self.meter.peak_machine_space.max(peak);
        if let Some(trace) = self.trace.as_mut() {
            trace.push(stored.to_vec());
        }
    }

    /// One synchronous round.
    ///
    /// Every machine's step sees only its own pre-round working set, which was
    /// charged at the previous barrier and may change type here; its output
    /// is delivered at the barrier in sender order. A cap violation aborts the
    /// round and leaves the cluster as it was before the round.
    pub fn run_round<I, T, F>(&mut self, work: Vec<Vec<I>>, step: F) -> Result<Vec<Vec<T>>, SimFault>
    where
        I: Send,
        T: Words + Send,
        F: Fn(usize, Vec<I>) -> Outbox<T> + Sync,
    {
        let machines = self.machines();
        let work = if work.is_empty() {
            (0..machines).map(|_| Vec::new()).collect()
        } else {
            work
        };
        assert_eq!(work.len(), machines, "working set must cover every machine");
        let round = self.meter.rounds_elapsed + 1;
        let cap = self.cap();

        let outboxes: Vec<Outbox<T>> = work
            .into_par_iter()
            .enumerate()
            .map(|(i, items)| step(i, items))
            .collect();

        let mut received_words = vec![0usize; machines];
        let mut peak_traffic = 0;
        for (i, out) in outboxes.iter().enumerate() {
            let mut sent = 0;
            for (dest, item) in &out.send {
                assert!(*dest < machines, "machine {i} addressed machine {dest}");
                let w = item.words();
                sent += w;
                received_words[*dest] += w;
            }
            if sent > cap {
                return Err(SimFault::Overflow {
                    round,
                    machine: i,
                    cap: Cap::Sent,
                    words: sent,
                    limit: cap,
                });
            }
            peak_traffic = peak_traffic.max(sent);
        }
        if let Some((machine, &words)) = received_words.iter().enumerate().find(|(_, &w)| w > cap) {
            return Err(SimFault::Overflow {
                round,
                machine,
                cap: Cap::Received,
                words,
                limit: cap,
            });
        }
        peak_traffic = peak_traffic.max(received_words.iter().copied().max().unwrap_or(0));

        let mut stored = self.resident_total.clone();
        for (i, out) in outboxes.iter().enumerate() {
            stored[i] += out.keep.iter().map(Words::words).sum::<usize>() + received_words[i];
        }
        if let Some((machine, &words)) = stored.iter().enumerate().find(|(_, &w)| w > cap) {
            return Err(SimFault::Overflow {
                round,
                machine,
                cap: Cap::Space,
                words,
                limit: cap,
            });
        }

        let mut inbound = vec![0usize; machines];
        for out in &outboxes {
            for (dest, _) in &out.send {
                inbound[*dest] += 1;
            }
        }
        let mut next: Vec<Vec<T>> = Vec::with_capacity(machines);
        let mut sends = Vec::with_capacity(machines);
        for (out, extra) in outboxes.into_iter().zip(inbound) {
            let mut keep = out.keep;
            keep.reserve_exact(extra);
            next.push(keep);
            sends.push(out.send);
        }
        for send in sends {
            for (dest, item) in send {
                next[dest].push(item);
            }
        }

        self.meter.rounds_elapsed = round;
        self.meter.peak_machine_traffic = self.meter.peak_machine_traffic.max(peak_traffic);
        self.observe_storage(&stored);
        Ok(next)
    }

    /// Empty per-machine working sets.
    pub fn empty_work<T>(&self) -> Vec<Vec<T>> {
        (0..self.machines()).map(|_| Vec::new()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn round_robin_placement() {
        let c = Cluster::init(ClusterConfig::explicit(3, 8, 2), &p3()).unwrap();
        assert_eq!(c.shards()[0], vec![(0, 1)]);
        assert_eq!(c.shards()[1], vec![(1, 2)]);
        let r = c.report();
        assert_eq!(r.rounds_elapsed, 0);
        assert_eq!(r.peak_total_space, 4);
        assert_eq!(r.peak_machine_space, 2);
    }

    #[test]
    fn empty_graph_has_zero_meters() {
        let c = Cluster::init(ClusterConfig::explicit(0, 8, 3), &Graph::empty(0)).unwrap();
        assert!(c.shards().iter().all(Vec::is_empty));
        assert_eq!(c.report(), RoundMeter::default());
    }

    #[test]
    fn capacity_error_when_input_too_large() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(matches!(
            Cluster::init(ClusterConfig::explicit(4, 2, 2), &g),
            Err(SimFault::Capacity { needed: 6, .. })
        ));
    }

    #[test]
    fn noop_round_advances_counter() {
        let mut c = Cluster::init(ClusterConfig::explicit(3, 8, 2), &p3()).unwrap();
        for k in 1..=3 {
            let w: Vec<Vec<Word>> = c.run_round(Vec::new(), |_, items| Outbox {
                keep: items,
                send: vec![],
            })
            .unwrap();
            assert!(w.iter().all(Vec::is_empty));
            assert_eq!(c.report().rounds_elapsed, k);
        }
        assert_eq!(c.shards()[0], vec![(0, 1)]);
    }

    #[test]
    fn gather_counts_on_machine_zero() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let mut c = Cluster::init(ClusterConfig::explicit(5, 16, 4), &g).unwrap();
        let counts: Vec<Word> = c.shards().iter().map(|s| 2 * s.len() as Word).collect();
        let out = c
            .run_round(Vec::new(), |i, _: Vec<Word>| Outbox::sending(vec![(0, counts[i])]))
            .unwrap();
        assert_eq!(out[0], vec![2, 2, 2, 2]);
    }

    #[test]
    fn oversend_faults() {
        let mut c = Cluster::init(ClusterConfig::explicit(4, 8, 4), &Graph::empty(4)).unwrap();
        let err = c
            .run_round(Vec::new(), |_, _: Vec<Word>| {
                Outbox::sending((0..8).map(|w| (0usize, w as Word)).collect())
            })
            .unwrap_err();
        assert!(matches!(
            err,
            SimFault::Overflow {
                machine: 0,
                cap: Cap::Received,
                words: 32,
                limit: 8,
                ..
            }
        ));
        // The aborted round is not counted.
        assert_eq!(c.report().rounds_elapsed, 0);
    }

    #[test]
    fn storage_overflow_faults() {
        let mut c = Cluster::init(ClusterConfig::explicit(2, 4, 2), &Graph::empty(2)).unwrap();
        let err = c
            .run_round(Vec::new(), |_, _: Vec<Word>| Outbox {
                keep: vec![0 as Word; 5],
                send: vec![],
            })
            .unwrap_err();
        assert!(matches!(err, SimFault::Overflow { cap: Cap::Space, .. }));
        assert!(c.set_resident("x", vec![5, 0]).is_err());
    }

    #[test]
    fn homes_partition_vertices() {
        let cfg = ClusterConfig::explicit(10, 64, 4);
        let c = Cluster::init(cfg, &Graph::empty(10)).unwrap();
        let mut seen = Vec::new();
        for m in 0..c.machines() {
            for v in c.homed(m) {
                assert_eq!(c.home(v), m);
                seen.push(v);
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }
}

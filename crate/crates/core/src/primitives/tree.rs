//! Fixed-height trees over machines, one per vertex.
//!
//! Node `(v, level, idx)` has parent `(v, level + 1, idx / fan)`. Level-0
//! nodes are machines holding edge shards (`idx` is the machine index), the
//! single top node `(v, levels, 0)` sits at `home(v)`, and the rest are placed
//! by hash. Every pass moves exactly one level per round.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::Vertex;
use crate::hash::mix3;
use crate::runtime::{Cluster, Outbox, Words};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    machines: usize,
    per_home: usize,
    fan: usize,
    levels: u32,
}

impl Layout {
    pub fn new(cluster: &Cluster, fan: usize) -> Self {
        let fan = fan.max(2);
        let machines = cluster.machines();
        let mut levels = 1;
        let mut reach = fan;
        while reach < machines {
            reach = reach.saturating_mul(fan);
            levels += 1;
        }
        Layout {
            machines,
            per_home: cluster.config().vertices_per_home,
            fan,
            levels,
        }
    }

    /// Widest fan-in whose packets of `payload_words` fill at most a quarter of a machine.
    pub fn for_payload(cluster: &Cluster, payload_words: usize) -> Self {
        Self::new(cluster, cluster.cap() / (4 * (payload_words + 2)))
    }

    #[cfg(test)]
    pub fn levels(&self) -> u32 {
        self.levels
    }

    #[inline]
    fn node(&self, v: Vertex, level: u32, idx: u32) -> usize {
        if level == 0 {
            idx as usize
        } else if level == self.levels {
            v as usize / self.per_home
        } else {
            (mix3(v as u64, level as u64, idx as u64) % self.machines as u64) as usize
        }
    }

    #[inline]
    fn parent(&self, idx: u32) -> u32 {
        idx / self.fan as u32
    }
}

/// A packet addressed to tree node `(v, ·, idx)`; the level is implied by the round.
#[derive(Debug, Clone)]
pub(crate) struct Packet<P> {
    v: Vertex,
    idx: u32,
    payload: P,
}

impl<P: Words> Words for Packet<P> {
    fn words(&self) -> usize {
        2 + self.payload.words()
    }
}

/// Distinct endpoints of every shard, per machine.
pub(crate) fn shard_vertices(cluster: &Cluster) -> Vec<Vec<Vertex>> {
    cluster
        .shards()
        .par_iter()
        .map(|shard| {
            let mut vs: Vec<Vertex> = shard.iter().flat_map(|&(u, v)| [u, v]).collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        })
        .collect()
}

/// Child lists of every node, kept so values can flow back down.
pub(crate) struct EdgeTree {
    layout: Layout,
    /// `children[l - 1][machine]`: sorted `(v, idx, child)` for level-`l` nodes hosted there.
    children: Vec<Vec<Vec<(Vertex, u32, u32)>>>,
}

const TREE_TAG: &str = "tree";

impl EdgeTree {
    /// Registers every shard's endpoints bottom-up; `levels` rounds.
    pub fn build(cluster: &mut Cluster) -> Result<Self, SimFault> {
        let layout = Layout::for_payload(cluster, 1);
        let leaves = shard_vertices(cluster);
        let mut children: Vec<Vec<Vec<(Vertex, u32, u32)>>> = Vec::new();
        for level in 1..=layout.levels {
            let below = children.last();
            let received = cluster.run_round(Vec::new(), |m, _: Vec<Packet<Vertex>>| {
                let mut send = Vec::new();
                match below {
                    None => {
                        let idx = layout.parent(m as u32);
                        for &v in &leaves[m] {
                            send.push((layout.node(v, 1, idx), Packet { v, idx, payload: m as Vertex }));
                        }
                    }
                    Some(table) => {
                        let mut last = None;
                        for &(v, idx, _) in &table[m] {
                            if last == Some((v, idx)) {
                                continue;
                            }
                            last = Some((v, idx));
                            let parent = layout.parent(idx);
                            send.push((
                                layout.node(v, level, parent),
                                Packet { v, idx: parent, payload: idx },
                            ));
                        }
                    }
                }
                Outbox::sending(send)
            })?;
            let table: Vec<Vec<(Vertex, u32, u32)>> = received
                .into_par_iter()
                .map(|pkts| {
                    let mut t: Vec<_> = pkts.into_iter().map(|p| (p.v, p.idx, p.payload)).collect();
                    t.sort_unstable();
                    t
                })
                .collect();
            children.push(table);
            let words = (0..cluster.machines())
                .map(|m| children.iter().map(|t| 2 * t[m].len()).sum())
                .collect();
            cluster.set_resident(TREE_TAG, words)?;
        }
        Ok(EdgeTree { layout, children })
    }

    /// Sends `top(v)` from `home(v)` to every shard holding an edge of `v`; `levels` rounds.
    /// Returns, per machine, the sorted `(v, value)` pairs for its shard's endpoints.
    pub fn broadcast<P, F>(&self, cluster: &mut Cluster, top: F) -> Result<Vec<Vec<(Vertex, P)>>, SimFault>
    where
        P: Words + Clone + Send + Sync,
        F: Fn(Vertex) -> P + Sync,
    {
        let layout = self.layout;
        let mut work: Vec<Vec<Packet<P>>> = cluster.empty_work();
        for level in (1..=layout.levels).rev() {
            let table = &self.children[level as usize - 1];
            work = cluster.run_round(work, |m, incoming| {
                let mut send = Vec::new();
                let here = &table[m];
                let mut forward = |v: Vertex, idx: u32, payload: &P| {
                    let lo = here.partition_point(|&(a, b, _)| (a, b) < (v, idx));
                    for &(_, _, child) in here[lo..].iter().take_while(|&&(a, b, _)| (a, b) == (v, idx)) {
                        send.push((
                            layout.node(v, level - 1, child),
                            Packet { v, idx: child, payload: payload.clone() },
                        ));
                    }
                };
                if level == layout.levels {
                    let mut last = None;
                    for &(v, idx, _) in here {
                        if last != Some(v) {
                            last = Some(v);
                            forward(v, idx, &top(v));
                        }
                    }
                } else {
                    for p in &incoming {
                        forward(p.v, p.idx, &p.payload);
                    }
                }
                Outbox::sending(send)
            })?;
        }
        Ok(work
            .into_par_iter()
            .map(|pkts| {
                let mut vals: Vec<(Vertex, P)> = pkts.into_iter().map(|p| (p.v, p.payload)).collect();
                vals.sort_unstable_by_key(|&(v, _)| v);
                vals
            })
            .collect())
    }

    pub fn release(self, cluster: &mut Cluster) {
        cluster.clear_resident(TREE_TAG);
    }
}

/// Combines per-machine `(v, value)` contributions up to `home(v)`; `levels` rounds.
/// The result is indexed by vertex and `None` where nothing was contributed.
pub(crate) fn reduce_up<P, C>(
    cluster: &mut Cluster,
    layout: Layout,
    contributions: Vec<Vec<(Vertex, P)>>,
    combine: C,
) -> Result<Vec<Option<P>>, SimFault>
where
    P: Words + Send + Sync,
    C: Fn(&mut P, P) + Sync,
{
    let n = cluster.config().n;
    let mut work: Vec<Vec<Packet<P>>> = contributions
        .into_iter()
        .enumerate()
        .map(|(m, vals)| {
            vals.into_iter()
                .map(|(v, payload)| Packet { v, idx: m as u32, payload })
                .collect()
        })
        .collect();
    if work.is_empty() {
        work = cluster.empty_work();
    }
    for level in 1..=layout.levels {
        work = cluster.run_round(work, |_, incoming| {
            let send = merge_packets(incoming, &combine)
                .into_iter()
                .map(|p| {
                    let idx = layout.parent(p.idx);
                    (layout.node(p.v, level, idx), Packet { v: p.v, idx, payload: p.payload })
                })
                .collect();
            Outbox::sending(send)
        })?;
    }
    let mut out: Vec<Option<P>> = (0..n).map(|_| None).collect();
    for pkts in work {
        for p in merge_packets(pkts, &combine) {
            out[p.v as usize] = Some(p.payload);
        }
    }
    Ok(out)
}

fn merge_packets<P, C: Fn(&mut P, P)>(mut pkts: Vec<Packet<P>>, combine: &C) -> Vec<Packet<P>> {
    pkts.sort_by_key(|p| (p.v, p.idx));
    let mut merged: Vec<Packet<P>> = Vec::with_capacity(pkts.len());
    for p in pkts {
        match merged.last_mut() {
            Some(last) if (last.v, last.idx) == (p.v, p.idx) => combine(&mut last.payload, p.payload),
            _ => merged.push(p),
        }
    }
    merged
}

/// Combines one word per machine and hands the result back to every machine;
/// `2 * levels` rounds over a tree of machine indices.
pub(crate) fn global_reduce<C>(cluster: &mut Cluster, per_machine: Vec<u64>, combine: C) -> Result<u64, SimFault>
where
    C: Fn(u64, u64) -> u64 + Sync,
{
    let layout = Layout::for_payload(cluster, 1);
    let fan = layout.fan;
    let machines = cluster.machines();
    let mut work: Vec<Vec<u64>> = per_machine.into_iter().map(|x| vec![x]).collect();
    let mut stride = 1usize;
    for _ in 0..layout.levels {
        let next = stride * fan;
        work = cluster.run_round(work, |m, items| {
            let Some(acc) = items.into_iter().reduce(&combine) else {
                return Outbox::new();
            };
            Outbox::sending(vec![((m / next) * next, acc)])
        })?;
        stride = next;
    }
    let total = work[0].iter().copied().reduce(&combine).unwrap_or(0);
    // Fan the result back out along the same tree.
    let mut holders = vec![0usize];
    for _ in 0..layout.levels {
        stride /= fan;
        let senders = holders.clone();
        let step = stride;
        let out = cluster.run_round(Vec::new(), |m, _: Vec<u64>| {
            if senders.binary_search(&m).is_err() {
                return Outbox::new();
            }
            let send = (1..fan)
                .map(|i| m + i * step)
                .filter(|&d| d < machines)
                .map(|d| (d, total))
                .collect();
            Outbox::sending(send)
        })?;
        holders.extend(out.iter().enumerate().filter(|(_, w)| !w.is_empty()).map(|(m, _)| m));
        holders.sort_unstable();
    }
    Ok(total)
}

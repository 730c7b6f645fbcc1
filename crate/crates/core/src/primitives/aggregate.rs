//! Neighborhood aggregation through per-vertex trees.

use rayon::prelude::*;

use crate::error::SimFault;
use crate::graph::{Edge, Vertex};
use crate::primitives::separable::SeparableFn;
use crate::primitives::tree::{global_reduce, reduce_up, EdgeTree, Layout};
use crate::runtime::{Cluster, Word, Words};

/// What the machine holding edge `(u, v)` does with it once both endpoint values arrive.
pub struct EdgeOutcome<P> {
    /// `false` drops the edge from the cluster.
    pub keep: bool,
    pub to_u: Option<P>,
    pub to_v: Option<P>,
}

impl<P> EdgeOutcome<P> {
    pub fn keep(to_u: Option<P>, to_v: Option<P>) -> Self {
        EdgeOutcome { keep: true, to_u, to_v }
    }
}

/// Broadcasts `vals` to every edge, applies `edge_fn(u, x_u, v, x_v)` with `u < v`,
/// and combines the per-endpoint outputs at the homes.
///
/// `2 * tree.levels()` rounds when `up` has the tree's height.
pub(crate) fn exchange<P, F, C>(
    cluster: &mut Cluster,
    tree: &EdgeTree,
    vals: &[Word],
    up: Layout,
    edge_fn: F,
    combine: C,
) -> Result<Vec<Option<P>>, SimFault>
where
    P: Words + Send + Sync,
    F: Fn(Vertex, Word, Vertex, Word) -> EdgeOutcome<P> + Sync,
    C: Fn(&mut P, P) + Sync,
{
    let known = tree.broadcast(cluster, |v| vals[v as usize])?;
    let local: Vec<(Vec<Edge>, Vec<(Vertex, P)>, bool)> = cluster
        .shards()
        .par_iter()
        .zip(known)
        .map(|(shard, known)| {
            let lookup = |w: Vertex| {
                let i = known.partition_point(|&(x, _)| x < w);
                known[i].1
            };
            let mut kept = Vec::with_capacity(shard.len());
            let mut out: Vec<(Vertex, P)> = Vec::new();
            let mut dropped = false;
            for &(u, v) in shard {
                let o = edge_fn(u, lookup(u), v, lookup(v));
                if o.keep {
                    kept.push((u, v));
                } else {
                    dropped = true;
                }
                out.extend(o.to_u.map(|p| (u, p)));
                out.extend(o.to_v.map(|p| (v, p)));
            }
            out.sort_by_key(|&(v, _)| v);
            let mut merged: Vec<(Vertex, P)> = Vec::with_capacity(out.len());
            for (v, p) in out {
                match merged.last_mut() {
                    Some((w, acc)) if *w == v => combine(acc, p),
                    _ => merged.push((v, p)),
                }
            }
            (kept, merged, dropped)
        })
        .collect();
    let any_dropped = local.iter().any(|(_, _, d)| *d);
    let mut shards = Vec::with_capacity(local.len());
    let mut contributions = Vec::with_capacity(local.len());
    for (kept, merged, _) in local {
        shards.push(kept);
        contributions.push(merged);
    }
    if any_dropped {
        cluster.replace_shards(shards)?;
    }
    reduce_up(cluster, up, contributions, combine)
}

/// Drops every edge `(u, v)` with `!keep(u, x_u, v, x_v)` and returns the
/// dropped edges per machine; `2 * levels` rounds.
pub(crate) fn filter_edges<F>(cluster: &mut Cluster, vals: &[Word], keep: F) -> Result<Vec<Vec<Edge>>, SimFault>
where
    F: Fn(Vertex, Word, Vertex, Word) -> bool + Sync,
{
    check_len(cluster, vals.len())?;
    let tree = EdgeTree::build(cluster)?;
    let known = tree.broadcast(cluster, |v| vals[v as usize])?;
    tree.release(cluster);
    let split: Vec<(Vec<Edge>, Vec<Edge>)> = cluster
        .shards()
        .par_iter()
        .zip(known)
        .map(|(shard, known)| {
            let lookup = |w: Vertex| known[known.partition_point(|&(x, _)| x < w)].1;
            shard.iter().partition(|&&(u, v)| keep(u, lookup(u), v, lookup(v)))
        })
        .collect();
    let (kept, dropped): (Vec<Vec<Edge>>, Vec<Vec<Edge>>) = split.into_iter().unzip();
    if dropped.iter().any(|d| !d.is_empty()) {
        cluster.replace_shards(kept)?;
    }
    Ok(dropped)
}

/// `f` over the neighbor values of every vertex, `f`'s identity for isolated
/// vertices; `3 * levels` rounds.
pub fn aggregate_neighbors(cluster: &mut Cluster, values: &[Word], f: SeparableFn) -> Result<Vec<Word>, SimFault> {
    check_len(cluster, values.len())?;
    let tree = EdgeTree::build(cluster)?;
    let up = Layout::for_payload(cluster, 1);
    let out = exchange(
        cluster,
        &tree,
        values,
        up,
        |_, xu, _, xv| EdgeOutcome::keep(Some(xv), Some(xu)),
        |a: &mut Word, b| *a = f.combine(*a, b),
    )?;
    tree.release(cluster);
    Ok(out.into_iter().map(|x| x.unwrap_or(f.identity())).collect())
}

/// Degree of every vertex in the current edge set; `levels` rounds.
pub fn compute_degrees(cluster: &mut Cluster) -> Result<Vec<u32>, SimFault> {
    let up = Layout::for_payload(cluster, 1);
    let contributions: Vec<Vec<(Vertex, Word)>> = cluster
        .shards()
        .par_iter()
        .map(|shard| {
            let mut ends: Vec<Vertex> = shard.iter().flat_map(|&(u, v)| [u, v]).collect();
            ends.sort_unstable();
            let mut out: Vec<(Vertex, Word)> = Vec::new();
            for w in ends {
                match out.last_mut() {
                    Some((x, c)) if *x == w => *c += 1,
                    _ => out.push((w, 1)),
                }
            }
            out
        })
        .collect();
    let out = reduce_up(cluster, up, contributions, |a: &mut Word, b| *a += b)?;
    Ok(out.into_iter().map(|d| d.unwrap_or(0) as u32).collect())
}

/// Folds one value per vertex over the whole cluster; every machine learns the result.
pub fn reduce_vertices(cluster: &mut Cluster, values: &[Word], f: SeparableFn) -> Result<Word, SimFault> {
    check_len(cluster, values.len())?;
    let per_machine = (0..cluster.machines())
        .map(|m| f.fold(cluster.homed(m).map(|v| values[v as usize])))
        .collect();
    global_reduce(cluster, per_machine, |a, b| f.combine(a, b))
}

/// The up to `k` smallest neighbor IDs `u` of each `v` with `eligible(v, x_v, u, x_u)`, sorted.
pub(crate) fn smallest_neighbors<F>(
    cluster: &mut Cluster,
    tree: &EdgeTree,
    vals: &[Word],
    k: usize,
    eligible: F,
) -> Result<Vec<Vec<Vertex>>, SimFault>
where
    F: Fn(Vertex, Word, Vertex, Word) -> bool + Sync,
{
    let up = Layout::for_payload(cluster, k.max(1));
    let out = exchange(
        cluster,
        tree,
        vals,
        up,
        |u, xu, v, xv| {
            EdgeOutcome::keep(
                eligible(u, xu, v, xv).then(|| vec![v]),
                eligible(v, xv, u, xu).then(|| vec![u]),
            )
        },
        |a: &mut Vec<Vertex>, b| {
            a.extend(b);
            a.sort_unstable();
            a.truncate(k);
        },
    )?;
    Ok(out.into_iter().map(Option::unwrap_or_default).collect())
}

fn check_len(cluster: &Cluster, len: usize) -> Result<(), SimFault> {
    if len != cluster.config().n {
        return Err(SimFault::Argument(format!(
            "{len} values for {} vertices",
            cluster.config().n
        )));
    }
    Ok(())
}

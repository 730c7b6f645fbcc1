//! Undirected simple graphs, edge-list I/O, generators for sparse families,
//! degeneracy peeling and t-hop extraction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type Vertex = u32;

/// An undirected edge, always stored as `(min, max)`.
pub type Edge = (Vertex, Vertex);

#[inline]
pub fn canonical(u: Vertex, v: Vertex) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Immutable simple graph on vertices `0..n`.
///
/// Edges are kept sorted in `(min, max)` order; adjacency is a CSR view with
/// every neighbor list sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<Vertex>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range IDs.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop { line: 0, vertex: u });
            }
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::Argument(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            list.push(canonical(u, v));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge {
                line: 0,
                u: w[0].0,
                v: w[0].1,
            });
        }
        Ok(Self::from_sorted(n, list))
    }

    /// Builds from edges that are already canonical, sorted and unique.
    fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![0; 2 * edges.len()];
        for &(u, v) in &edges {
            adjacency[fill[u as usize]] = v;
            fill[u as usize] += 1;
            adjacency[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            n,
            edges,
            offsets,
            adjacency,
        }
    }

    /// Builds from an arbitrary edge multiset, silently dropping loops and duplicates.
    pub fn from_edges_dedup(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut list: Vec<Edge> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| canonical(u, v))
            .collect();
        list.sort_unstable();
        list.dedup();
        Self::from_sorted(n, list)
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n as Vertex).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n as Vertex)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        0..self.n as Vertex
    }

    /// Serializes to the edge-list text format, with an `n` header line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(12 * self.m() + 16);
        let _ = writeln!(out, "n {}", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Parses the edge-list format: one `u v` pair per line, `#` comments, and an
/// optional leading `n <count>` header.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut header: Option<usize> = None;
    let mut seen_edge = false;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut max_id: Option<Vertex> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| GraphError::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut fields = text.split_whitespace();
        let first = fields.next().unwrap();
        if first == "n" {
            if seen_edge || header.is_some() {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: "header must precede all edges".into(),
                });
            }
            let count = fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .ok_or_else(|| GraphError::Parse {
                    line: lineno,
                    msg: "expected `n <count>`".into(),
                })?;
            if fields.next().is_some() {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: "trailing fields after header".into(),
                });
            }
            header = Some(count);
            continue;
        }
        let parse = |f: Option<&str>| -> Result<Vertex, GraphError> {
            f.and_then(|s| s.parse::<Vertex>().ok())
                .ok_or_else(|| GraphError::Parse {
                    line: lineno,
                    msg: format!("expected two non-negative integers, got `{text}`"),
                })
        };
        let u = parse(Some(first))?;
        let v = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(GraphError::Parse {
                line: lineno,
                msg: format!("expected two non-negative integers, got `{text}`"),
            });
        }
        if u == v {
            return Err(GraphError::SelfLoop {
                line: lineno,
                vertex: u,
            });
        }
        let e = canonical(u, v);
        if !seen.insert(e) {
            return Err(GraphError::DuplicateEdge {
                line: lineno,
                u: e.0,
                v: e.1,
            });
        }
        max_id = Some(max_id.map_or(e.1, |m| m.max(e.1)));
        edges.push(e);
        seen_edge = true;
    }
    let implied = max_id.map_or(0, |m| m as usize + 1);
    let n = match header {
        Some(h) if h < implied => {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header n = {h} but vertex {} appears", implied - 1),
            })
        }
        Some(h) => h,
        None => implied,
    };
    edges.sort_unstable();
    Ok(Graph::from_sorted(n, edges))
}

/// Parameterized graph families used as experiment inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Uniform random labeled tree.
    Tree { n: usize },
    Grid { rows: usize, cols: usize },
    /// Union of `alpha` independent uniform random spanning trees.
    ForestUnion { n: usize, alpha: usize },
    Gnm { n: usize, m: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Tree { .. } => "tree",
            Family::Grid { .. } => "grid",
            Family::ForestUnion { .. } => "forest_union",
            Family::Gnm { .. } => "gnm",
        }
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            Family::Tree { n } | Family::ForestUnion { n, .. } | Family::Gnm { n, .. } => n,
            Family::Grid { rows, cols } => rows * cols,
        }
    }
}

/// Deterministic generator: equal `(family, seed)` always yields the same graph.
pub fn generate(family: Family, seed: u64) -> Result<Graph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        Family::Tree { n } => {
            if n == 0 {
                return Err(GraphError::Argument("tree needs n >= 1".into()));
            }
            Ok(Graph::from_edges_dedup(n, random_tree(n, &mut rng)))
        }
        Family::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(GraphError::Argument("grid needs rows, cols >= 1".into()));
            }
            let id = |r: usize, c: usize| (r * cols + c) as Vertex;
            let mut edges = Vec::with_capacity(2 * rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Ok(Graph::from_edges_dedup(rows * cols, edges))
        }
        Family::ForestUnion { n, alpha } => {
            if n == 0 || alpha == 0 {
                return Err(GraphError::Argument(
                    "forest_union needs n >= 1 and alpha >= 1".into(),
                ));
            }
            let mut edges = Vec::with_capacity(alpha * n);
            for _ in 0..alpha {
                edges.extend(random_tree(n, &mut rng));
            }
            Ok(Graph::from_edges_dedup(n, edges))
        }
        Family::Gnm { n, m } => {
            let max = n.saturating_mul(n.saturating_sub(1)) / 2;
            if m > max {
                return Err(GraphError::Argument(format!(
                    "gnm: m = {m} exceeds n(n-1)/2 = {max}"
                )));
            }
            let mut chosen = BTreeSet::new();
            if 2 * m > max {
                // Dense: shuffle all pairs.
                let mut all: Vec<Edge> = (0..n as Vertex)
                    .flat_map(|u| (u + 1..n as Vertex).map(move |v| (u, v)))
                    .collect();
                all.shuffle(&mut rng);
                chosen.extend(all.into_iter().take(m));
            } else {
                while chosen.len() < m {
                    let u = rng.random_range(0..n as Vertex);
                    let v = rng.random_range(0..n as Vertex);
                    if u != v {
                        chosen.insert(canonical(u, v));
                    }
                }
            }
            Ok(Graph::from_sorted(n, chosen.into_iter().collect()))
        }
    }
}

/// Uniform random labeled tree on `n` vertices via a random Prüfer sequence.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    // Linear-time decoding.
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = degree.iter().position(|&d| d == 1).unwrap();
    let mut leaf = ptr;
    for &c in &code {
        edges.push(canonical(leaf as Vertex, c as Vertex));
        degree[c] -= 1;
        if degree[c] == 1 && c < ptr {
            leaf = c;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push(canonical(leaf as Vertex, (n - 1) as Vertex));
    edges
}

/// Degeneracy and a densest-prefix bound taken from the same peeling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub degeneracy: usize,
    /// Edges of the densest peeling suffix found.
    pub dense_edges: usize,
    /// Vertices of that suffix (at least 2 when any edge exists).
    pub dense_vertices: usize,
}

impl SparsityReport {
    /// `max |E(S)| / (|S| - 1)` over the peeling suffixes `S`.
    pub fn density_bound(&self) -> f64 {
        if self.dense_vertices < 2 {
            0.0
        } else {
            self.dense_edges as f64 / (self.dense_vertices - 1) as f64
        }
    }

    /// Lower end of the arboricity bracket.
    pub fn arboricity_lower(&self) -> usize {
        if self.dense_vertices < 2 {
            0
        } else {
            self.dense_edges.div_ceil(self.dense_vertices - 1)
        }
    }
}

/// Min-degree peeling with bucket queues.
pub fn degeneracy(g: &Graph) -> SparsityReport {
    let n = g.n();
    let mut deg = g.degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<Vertex>> = vec![Vec::new(); max_deg + 1];
    for v in 0..n {
        buckets[deg[v]].push(v as Vertex);
    }
    let mut removed = vec![false; n];
    let mut remaining_edges = g.m();
    let mut report = SparsityReport {
        degeneracy: 0,
        dense_edges: 0,
        dense_vertices: 0,
    };
    let consider = |edges: usize, verts: usize, r: &mut SparsityReport| {
        if verts >= 2 && edges * (r.dense_vertices.max(2) - 1) > r.dense_edges * (verts - 1) {
            r.dense_edges = edges;
            r.dense_vertices = verts;
        }
    };
    let mut level = 0usize;
    for left in (1..=n).rev() {
        consider(remaining_edges, left, &mut report);
        level = level.saturating_sub(1);
        let v = loop {
            while buckets[level].is_empty() {
                level += 1;
            }
            let v = buckets[level].pop().unwrap();
            if !removed[v as usize] && deg[v as usize] == level {
                break v;
            }
        };
        report.degeneracy = report.degeneracy.max(level);
        removed[v as usize] = true;
        remaining_edges -= deg[v as usize];
        for &u in g.neighbors(v) {
            let u = u as usize;
            if !removed[u] {
                deg[u] -= 1;
                buckets[deg[u]].push(u as Vertex);
            }
        }
    }
    report
}

/// The induced subgraph on all vertices within distance `radius` of `center`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopBall {
    pub center: Vertex,
    pub radius: usize,
    /// Sorted original vertex IDs.
    pub vertices: Vec<Vertex>,
    /// Sorted canonical edges with both endpoints in `vertices`.
    pub edges: Vec<Edge>,
}

impl HopBall {
    /// Word cost: one per vertex, two per edge.
    pub fn words(&self) -> usize {
        self.vertices.len() + 2 * self.edges.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

/// Sequential BFS reference for a t-hop.
pub fn t_hop(g: &Graph, center: Vertex, radius: usize) -> HopBall {
    let mut dist = std::collections::HashMap::new();
    dist.insert(center, 0usize);
    let mut queue = VecDeque::from([center]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == radius {
            continue;
        }
        for &y in g.neighbors(x) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(y) {
                slot.insert(d + 1);
                queue.push_back(y);
            }
        }
    }
    let mut vertices: Vec<Vertex> = dist.keys().copied().collect();
    vertices.sort_unstable();
    let mut edges = Vec::new();
    for &x in &vertices {
        for &y in g.neighbors(x) {
            if x < y && dist.contains_key(&y) {
                edges.push((x, y));
            }
        }
    }
    HopBall {
        center,
        radius,
        vertices,
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Graph, GraphError> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn parses_path() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn header_only_gives_isolated_vertices() {
        let g = parse("n 4\n").unwrap();
        assert_eq!((g.n(), g.m()), (4, 0));
        assert_eq!(parse("").unwrap().n(), 0);
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(
            parse("0 0").unwrap_err(),
            GraphError::SelfLoop { line: 1, vertex: 0 }
        );
        assert_eq!(
            parse("# c\n0 1\n1 0").unwrap_err(),
            GraphError::DuplicateEdge { line: 3, u: 0, v: 1 }
        );
        assert!(matches!(
            parse("0 1\nx 2"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("0 1 2"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("n 2\n0 5"), Err(GraphError::Parse { .. })));
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = generate(Family::Gnm { n: 30, m: 50 }, 3).unwrap();
        assert_eq!(parse(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn generator_shapes() {
        let t = generate(Family::Tree { n: 5 }, 7).unwrap();
        assert_eq!((t.n(), t.m()), (5, 4));
        assert!(is_connected(&t));
        let grid = generate(Family::Grid { rows: 3, cols: 3 }, 99).unwrap();
        assert_eq!((grid.n(), grid.m()), (9, 12));
        let gnm = generate(Family::Gnm { n: 10, m: 45 }, 1).unwrap();
        assert_eq!(gnm.m(), 45);
        assert!(generate(Family::Gnm { n: 10, m: 46 }, 1).is_err());
        assert!(generate(Family::Grid { rows: 0, cols: 3 }, 1).is_err());
        assert!(generate(Family::ForestUnion { n: 10, alpha: 0 }, 1).is_err());
    }

    #[test]
    fn generator_is_reproducible() {
        let f = Family::ForestUnion { n: 300, alpha: 3 };
        assert_eq!(generate(f, 11).unwrap(), generate(f, 11).unwrap());
        assert_ne!(generate(f, 11).unwrap(), generate(f, 12).unwrap());
    }

    fn is_connected(g: &Graph) -> bool {
        g.n() == 0 || t_hop(g, 0, g.n()).vertices.len() == g.n()
    }

    #[test]
    fn degeneracy_examples() {
        let tree = generate(Family::Tree { n: 50 }, 5).unwrap();
        assert_eq!(degeneracy(&tree).degeneracy, 1);
        let k4 = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let r = degeneracy(&k4);
        assert_eq!(r.degeneracy, 3);
        assert_eq!((r.dense_edges, r.dense_vertices), (6, 4));
        assert_eq!(r.arboricity_lower(), 2);
        let grid = generate(Family::Grid { rows: 4, cols: 4 }, 0).unwrap();
        assert_eq!(degeneracy(&grid).degeneracy, 2);
        assert_eq!(degeneracy(&Graph::empty(3)).degeneracy, 0);
    }

    #[test]
    fn t_hop_examples() {
        let p5 = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let b = t_hop(&p5, 2, 2);
        assert_eq!(b.vertices, vec![0, 1, 2, 3, 4]);
        assert_eq!(b.edges.len(), 4);
        let b0 = t_hop(&p5, 3, 0);
        assert_eq!((b0.vertices.clone(), b0.edges.len()), (vec![3], 0));
        let c6 = Graph::new(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        let c = t_hop(&c6, 0, 3);
        assert_eq!(c.vertices.len(), 6);
        assert_eq!(c.edges.len(), 6);
        // Radius 2 misses the antipode and the two edges touching it.
        let c2 = t_hop(&c6, 0, 2);
        assert_eq!((c2.vertices.len(), c2.edges.len()), (5, 4));
    }
}

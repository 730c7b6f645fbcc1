//! 2-approximate vertex cover from a maximal matching.

use crate::error::GraphError;
use crate::graph::{Graph, Vertex};

/// Both endpoints of every matched edge, sorted.
///
/// Fails when `matching` is not a maximal matching of `g`, since the
/// endpoints would then miss an edge.
pub fn vertex_cover_from_mm(g: &Graph, matching: &[(Vertex, Vertex)]) -> Result<Vec<Vertex>, GraphError> {
    let mut matched = vec![false; g.n()];
    for &(a, b) in matching {
        if a as usize >= g.n() || b as usize >= g.n() || !g.has_edge(a, b) {
            return Err(GraphError::Argument(format!("({a},{b}) is not an edge")));
        }
        for x in [a, b] {
            if std::mem::replace(&mut matched[x as usize], true) {
                return Err(GraphError::Argument(format!("vertex {x} is matched twice")));
            }
        }
    }
    if let Some(&(u, v)) = g.edges().iter().find(|&&(u, v)| !matched[u as usize] && !matched[v as usize]) {
        return Err(GraphError::Argument(format!("matching is not maximal: ({u},{v}) is uncovered")));
    }
    let mut cover: Vec<Vertex> = matching.iter().flat_map(|&(a, b)| [a, b]).collect();
    cover.sort_unstable();
    Ok(cover)
}

//! Output checkers. They read only the original edge list.

use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    /// First violation found.
    pub violation: Option<String>,
}

impl Verdict {
    fn ok() -> Self {
        Verdict {
            valid: true,
            violation: None,
        }
    }

    fn fail(msg: String) -> Self {
        Verdict {
            valid: false,
            violation: Some(msg),
        }
    }
}

fn membership(n: usize, set: &[Vertex]) -> Result<Vec<bool>, Verdict> {
    let mut member = vec![false; n];
    for &v in set {
        if v as usize >= n {
            return Err(Verdict::fail(format!("vertex {v} is not in the graph")));
        }
        member[v as usize] = true;
    }
    Ok(member)
}

/// Independence: no edge inside `set`. Maximality: every vertex outside has a neighbor inside.
pub fn check_mis(g: &Graph, set: &[Vertex]) -> Verdict {
    let member = match membership(g.n(), set) {
        Ok(m) => m,
        Err(v) => return v,
    };
    let mut dominated = member.clone();
    for &(u, v) in g.edges() {
        if member[u as usize] && member[v as usize] {
            return Verdict::fail(format!("edge ({u},{v}) has both endpoints in the set"));
        }
        dominated[u as usize] |= member[v as usize];
        dominated[v as usize] |= member[u as usize];
    }
    match dominated.iter().position(|&d| !d) {
        Some(v) => Verdict::fail(format!("vertex {v} could be added")),
        None => Verdict::ok(),
    }
}

/// Disjointness of the matched edges, and every graph edge touching a matched vertex.
pub fn check_mm(g: &Graph, matching: &[Edge]) -> Verdict {
    let mut matched = vec![false; g.n()];
    for &(a, b) in matching {
        let (u, v) = (a.min(b), a.max(b));
        if !g.has_edge(u, v) {
            return Verdict::fail(format!("({u},{v}) is not an edge of the graph"));
        }
        for x in [u, v] {
            if matched[x as usize] {
                return Verdict::fail(format!("vertex {x} is matched twice"));
            }
            matched[x as usize] = true;
        }
    }
    for &(u, v) in g.edges() {
        if !matched[u as usize] && !matched[v as usize] {
            return Verdict::fail(format!("edge ({u},{v}) could be added"));
        }
    }
    Verdict::ok()
}

/// Every edge has an endpoint in `cover`.
pub fn check_cover(g: &Graph, cover: &[Vertex]) -> Verdict {
    let member = match membership(g.n(), cover) {
        Ok(m) => m,
        Err(v) => return v,
    };
    match g.edges().iter().find(|&&(u, v)| !member[u as usize] && !member[v as usize]) {
        Some(&(u, v)) => Verdict::fail(format!("edge ({u},{v}) is uncovered")),
        None => Verdict::ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u32) -> Graph {
        Graph::new(n as usize, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn mis_examples() {
        let p3 = path(3);
        assert!(check_mis(&p3, &[0, 2]).valid);
        let bad = check_mis(&p3, &[0, 1]);
        assert!(!bad.valid);
        assert!(bad.violation.unwrap().contains("(0,1)"));
        let small = check_mis(&p3, &[0]);
        assert_eq!(small.violation.as_deref(), Some("vertex 2 could be added"));
        assert!(!check_mis(&p3, &[7]).valid);
    }

    #[test]
    fn mm_examples() {
        assert!(check_mm(&path(2), &[(0, 1)]).valid);
        let twice = check_mm(&path(4), &[(0, 1), (1, 2)]);
        assert_eq!(twice.violation.as_deref(), Some("vertex 1 is matched twice"));
        assert!(check_mm(&path(4), &[(1, 2)]).valid);
        assert!(!check_mm(&path(4), &[(0, 2)]).valid);
        assert!(!check_mm(&path(4), &[(0, 1)]).valid);
    }

    #[test]
    fn empty_graph() {
        let g = Graph::empty(3);
        assert!(check_mis(&g, &[0, 1, 2]).valid);
        assert!(!check_mis(&g, &[0, 1]).valid);
        assert!(check_mm(&g, &[]).valid);
        assert!(check_cover(&g, &[]).valid);
    }

    #[test]
    fn cover_examples() {
        assert!(check_cover(&path(4), &[1, 2]).valid);
        assert!(!check_cover(&path(4), &[1]).valid);
    }
}

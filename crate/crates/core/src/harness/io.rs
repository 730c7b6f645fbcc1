//! Result files: one vertex ID per line for an independent set, one `u v`
//! pair per line for a matching. Blank lines and `#` comments are ignored.

use std::fmt::Write;

use crate::error::GraphError;
use crate::graph::{Edge, Vertex};
use crate::symbreak::{Mode, Solution};

pub fn format_solution(solution: &Solution) -> String {
    let mut out = String::new();
    match solution.kind {
        Mode::Mis => {
            for v in &solution.mis {
                let _ = writeln!(out, "{v}");
            }
        }
        Mode::Mm => {
            for (u, v) in &solution.matching {
                let _ = writeln!(out, "{u} {v}");
            }
        }
    }
    out
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn vertex(line: usize, s: &str) -> Result<Vertex, GraphError> {
    s.parse().map_err(|_| GraphError::Parse {
        line,
        msg: format!("not a vertex id: {s:?}"),
    })
}

pub fn parse_vertices(text: &str) -> Result<Vec<Vertex>, GraphError> {
    lines(text)
        .map(|(line, f)| match f.as_slice() {
            [v] => vertex(line, v),
            _ => Err(GraphError::Parse {
                line,
                msg: "expected one vertex id".into(),
            }),
        })
        .collect()
}

pub fn parse_pairs(text: &str) -> Result<Vec<Edge>, GraphError> {
    lines(text)
        .map(|(line, f)| match f.as_slice() {
            [u, v] => Ok((vertex(line, u)?, vertex(line, v)?)),
            _ => Err(GraphError::Parse {
                line,
                msg: "expected a vertex pair".into(),
            }),
        })
        .collect()
}

//! Per-vertex progress of a pipeline run and its final output.

use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Vertex};
use crate::symbreak::params::Mode;
use crate::symbreak::reduction::CallOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexStatus {
    Active,
    /// Low degree with no high-degree neighbor; inert until the phase ends.
    Dead,
    InMis,
    RemovedByMisNeighbor,
    Matched,
}

impl VertexStatus {
    /// Absorbing statuses.
    pub fn is_decided(self) -> bool {
        matches!(self, VertexStatus::InMis | VertexStatus::RemovedByMisNeighbor | VertexStatus::Matched)
    }
}

/// A maximal independent set or maximal matching; `vertex_cover` holds the
/// endpoints of the matching and is empty for MIS runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub kind: Mode,
    pub mis: Vec<Vertex>,
    pub matching: Vec<Edge>,
    pub vertex_cover: Vec<Vertex>,
}

/// Statuses plus the partial output gathered so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progress {
    pub status: Vec<VertexStatus>,
    pub mis: Vec<Vertex>,
    pub matching: Vec<Edge>,
}

impl Progress {
    pub fn new(n: usize) -> Self {
        Progress {
            status: vec![VertexStatus::Active; n],
            mis: Vec::new(),
            matching: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.status.len()
    }

    pub fn is_decided(&self, v: Vertex) -> bool {
        self.status[v as usize].is_decided()
    }

    pub fn decided(&self) -> Vec<bool> {
        self.status.iter().map(|s| s.is_decided()).collect()
    }

    /// Applies decisions; every decided vertex must still be undecided here.
    pub fn record(&mut self, out: &CallOutcome) {
        let mut set = |v: Vertex, s: VertexStatus| {
            let slot = &mut self.status[v as usize];
            debug_assert!(!slot.is_decided(), "vertex {v} decided twice");
            *slot = s;
        };
        for &v in &out.joined {
            set(v, VertexStatus::InMis);
        }
        for &v in &out.removed {
            set(v, VertexStatus::RemovedByMisNeighbor);
        }
        for &(a, b) in &out.matched {
            set(a, VertexStatus::Matched);
            set(b, VertexStatus::Matched);
        }
        self.mis.extend_from_slice(&out.joined);
        self.matching.extend_from_slice(&out.matched);
    }

    /// Turns every dead vertex active again.
    pub fn revive(&mut self) {
        for s in &mut self.status {
            if *s == VertexStatus::Dead {
                *s = VertexStatus::Active;
            }
        }
    }

    pub fn into_solution(mut self, kind: Mode) -> Solution {
        self.mis.sort_unstable();
        self.matching.sort_unstable();
        let mut vertex_cover: Vec<Vertex> = match kind {
            Mode::Mis => Vec::new(),
            Mode::Mm => self.matching.iter().flat_map(|&(a, b)| [a, b]).collect(),
        };
        vertex_cover.sort_unstable();
        Solution {
            kind,
            mis: if kind == Mode::Mis { self.mis } else { Vec::new() },
            matching: if kind == Mode::Mm { self.matching } else { Vec::new() },
            vertex_cover,
        }
    }
}

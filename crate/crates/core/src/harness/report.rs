//! Run reports: one pipeline run with its input, configuration, meters,
//! checker verdicts and phase trace.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::SimFault;
use crate::graph::{degeneracy, Family, Graph};
use crate::harness::check::{check_cover, check_mis, check_mm};
use crate::runtime::{Cluster, ClusterConfig, RoundMeter};
use crate::symbreak::{
    run_pipeline, vertex_cover_from_mm, DegreeReductionParams, Fidelity, LowDegreeReport, Mode, PhaseTrace,
    PipelineConfig, Solution, SpaceMode,
};

/// Bumped whenever a field of [`RunReport`] is renamed, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Where the input graph came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    /// Generator family name, or `"file"`.
    pub family: String,
    /// Generator parameters when the graph was generated.
    pub generator: Option<Family>,
    /// Generator seed; `None` for files.
    pub seed: Option<u64>,
    pub path: Option<String>,
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    pub degeneracy: usize,
}

impl InputDescriptor {
    pub fn generated(g: &Graph, family: Family, seed: u64) -> Self {
        Self::describe(g, family.name().to_string(), Some(family), Some(seed), None)
    }

    pub fn file(g: &Graph, path: &str) -> Self {
        Self::describe(g, "file".to_string(), None, None, Some(path.to_string()))
    }

    fn describe(g: &Graph, family: String, generator: Option<Family>, seed: Option<u64>, path: Option<String>) -> Self {
        InputDescriptor {
            family,
            generator,
            seed,
            path,
            n: g.n(),
            m: g.m(),
            max_degree: g.max_degree(),
            degeneracy: degeneracy(g).degeneracy,
        }
    }
}

/// Everything that determines a run besides the input graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub mode: Mode,
    pub epsilon: f64,
    pub space_coefficient: f64,
    pub fidelity: Fidelity,
    pub space_mode: SpaceMode,
    pub seed: u64,
    pub strict: bool,
    /// Replaces the computed degree-reduction threshold.
    pub tau_override: Option<u64>,
}

impl RunSettings {
    pub fn new(mode: Mode) -> Self {
        RunSettings {
            mode,
            epsilon: 0.5,
            space_coefficient: 8.0,
            fidelity: Fidelity::Desk,
            space_mode: SpaceMode::Warmup,
            seed: 0,
            strict: true,
            tau_override: None,
        }
    }

    pub fn params(&self) -> DegreeReductionParams {
        let p = DegreeReductionParams::new(self.mode, self.fidelity);
        match self.tau_override {
            Some(t) => p.with_tau(t),
            None => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub machine_space: usize,
    pub machine_count: usize,
    pub cap: usize,
    pub slack: f64,
}

/// Output sizes and verdicts recomputed from the original graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    /// `|I|` for mis, `|M|` for mm.
    pub size: usize,
    pub valid_mis: Option<bool>,
    pub valid_mm: Option<bool>,
    pub cover_size: Option<usize>,
    pub valid_cover: Option<bool>,
    pub violation: Option<String>,
}

impl ResultSummary {
    pub fn valid(&self) -> bool {
        self.valid_mis.unwrap_or(true) && self.valid_mm.unwrap_or(true) && self.valid_cover.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub input: InputDescriptor,
    pub config: RunSettings,
    pub cluster: ClusterSummary,
    pub meters: RoundMeter,
    pub result: ResultSummary,
    pub tau: u64,
    pub delta_initial: usize,
    pub delta_low: usize,
    /// Median measured removal exponent per window.
    pub delta_hat: Option<f64>,
    pub delta_hat_min: Option<f64>,
    pub phases: Vec<PhaseTrace>,
    pub low_degree: LowDegreeReport,
    /// Wall-clock time; the only field allowed to differ between equal runs.
    pub wall_ms: f64,
}

impl RunReport {
    /// The report as JSON without wall-clock fields.
    pub fn payload(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_ms");
        }
        v
    }
}

/// Verdicts of the checkers on `solution` against `g`.
pub fn summarize(g: &Graph, solution: &Solution) -> ResultSummary {
    match solution.kind {
        Mode::Mis => {
            let v = check_mis(g, &solution.mis);
            ResultSummary {
                size: solution.mis.len(),
                valid_mis: Some(v.valid),
                valid_mm: None,
                cover_size: None,
                valid_cover: None,
                violation: v.violation,
            }
        }
        Mode::Mm => {
            let v = check_mm(g, &solution.matching);
            let (cover_size, valid_cover, cover_violation) = match vertex_cover_from_mm(g, &solution.matching) {
                Ok(cover) => {
                    let c = check_cover(g, &cover);
                    let exact = cover.len() == 2 * solution.matching.len();
                    let msg = c.violation.or_else(|| (!exact).then(|| format!("cover size {}", cover.len())));
                    (Some(cover.len()), Some(c.valid && exact), msg)
                }
                Err(e) => (None, Some(false), Some(e.to_string())),
            };
            ResultSummary {
                size: solution.matching.len(),
                valid_mis: None,
                valid_mm: Some(v.valid),
                cover_size,
                valid_cover,
                violation: v.violation.or(cover_violation),
            }
        }
    }
}

/// Runs the pipeline on a fresh cluster and reports it.
pub fn run_report(g: &Graph, input: InputDescriptor, settings: &RunSettings) -> Result<(RunReport, Solution), SimFault> {
    let started = Instant::now();
    let config = ClusterConfig::for_graph(g, settings.epsilon, settings.space_coefficient, settings.strict)?;
    let mut cluster = Cluster::init(config, g)?;
    let run = run_pipeline(
        &mut cluster,
        &PipelineConfig {
            params: settings.params(),
            space_mode: settings.space_mode,
            seed: settings.seed,
        },
    )?;
    let result = summarize(g, &run.solution);
    let cfg = cluster.config();
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        input,
        config: settings.clone(),
        cluster: ClusterSummary {
            machine_space: cfg.machine_space,
            machine_count: cfg.machine_count,
            cap: cfg.cap(),
            slack: cfg.slack,
        },
        meters: cluster.report(),
        result,
        tau: run.tau,
        delta_initial: run.delta_initial,
        delta_low: run.delta_low,
        delta_hat: run.delta_hat,
        delta_hat_min: run.delta_hat_min,
        phases: run.phases,
        low_degree: run.low_degree,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok((report, run.solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    fn report(family: Family, mode: Mode, space_mode: SpaceMode) -> RunReport {
        let g = generate(family, 1).unwrap();
        let mut s = RunSettings::new(mode);
        s.space_mode = space_mode;
        s.seed = 3;
        run_report(&g, InputDescriptor::generated(&g, family, 1), &s).unwrap().0
    }

    #[test]
    fn tree_mis_is_valid() {
        let r = report(Family::Tree { n: 500 }, Mode::Mis, SpaceMode::Warmup);
        assert_eq!(r.result.valid_mis, Some(true));
        assert_eq!(r.result.valid_mm, None);
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert_eq!(r.input.degeneracy, 1);
    }

    #[test]
    fn mm_reports_cover() {
        let r = report(Family::Grid { rows: 12, cols: 12 }, Mode::Mm, SpaceMode::Optimized);
        assert_eq!(r.result.valid_mm, Some(true));
        assert_eq!(r.result.valid_cover, Some(true));
        assert_eq!(r.result.cover_size, Some(2 * r.result.size));
    }

    #[test]
    fn payload_drops_wall_clock() {
        let a = report(Family::ForestUnion { n: 300, alpha: 2 }, Mode::Mis, SpaceMode::Optimized);
        let b = report(Family::ForestUnion { n: 300, alpha: 2 }, Mode::Mis, SpaceMode::Optimized);
        assert!(a.payload().get("wall_ms").is_none());
        assert_eq!(a.payload().to_string(), b.payload().to_string());
    }

    #[test]
    fn summary_flags_a_bad_matching() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let bad = Solution {
            kind: Mode::Mm,
            mis: Vec::new(),
            matching: vec![(1, 2)],
            vertex_cover: Vec::new(),
        };
        assert!(summarize(&g, &bad).valid());
        let worse = Solution {
            matching: vec![(0, 1)],
            ..bad
        };
        let s = summarize(&g, &worse);
        assert_eq!(s.valid_mm, Some(false));
        assert!(!s.valid());
    }
}

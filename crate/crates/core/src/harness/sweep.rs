//! Grid sweeps over families, sizes, seeds and modes, written as CSV rows.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, GraphError};
use crate::graph::{generate, Family};
use crate::harness::report::{run_report, InputDescriptor, RunReport, RunSettings};
use crate::symbreak::{Mode, SpaceMode};

/// Column order of the sweep CSV; rows from any version with this header are comparable.
pub const SWEEP_HEADER: &[&str] = &[
    "family",
    "n",
    "m",
    "graph_seed",
    "run_seed",
    "algo",
    "space_mode",
    "fidelity",
    "epsilon",
    "space_coeff",
    "rounds",
    "peak_machine_space",
    "peak_machine_traffic",
    "peak_total_space",
    "size",
    "valid",
    "phases",
    "delta_initial",
    "delta_low",
    "delta_hat",
];

/// A family shape instantiated at each size of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    Tree,
    /// Near-square grid with about `n` vertices.
    Grid,
    ForestUnion { alpha: usize },
    /// `m = avg_degree * n / 2`.
    Gnm { avg_degree: usize },
}

impl std::str::FromStr for FamilyKind {
    type Err = GraphError;

    /// `tree`, `grid`, `forest_union[:alpha]` (default 2) or `gnm[:avg_degree]` (default 4).
    fn from_str(s: &str) -> Result<Self, GraphError> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let number = |default: usize| -> Result<usize, GraphError> {
            arg.map_or(Ok(default), |a| {
                a.parse().map_err(|_| GraphError::Argument(format!("bad family parameter in {s:?}")))
            })
        };
        match (name, arg) {
            ("tree", None) => Ok(FamilyKind::Tree),
            ("grid", None) => Ok(FamilyKind::Grid),
            ("forest_union", _) => Ok(FamilyKind::ForestUnion { alpha: number(2)? }),
            ("gnm", _) => Ok(FamilyKind::Gnm { avg_degree: number(4)? }),
            _ => Err(GraphError::Argument(format!("unknown family {s:?}"))),
        }
    }
}

impl FamilyKind {
    pub fn at(self, n: usize) -> Family {
        match self {
            FamilyKind::Tree => Family::Tree { n },
            FamilyKind::Grid => {
                let rows = (n as f64).sqrt().floor().max(1.0) as usize;
                Family::Grid { rows, cols: n.div_ceil(rows) }
            }
            FamilyKind::ForestUnion { alpha } => Family::ForestUnion { n, alpha },
            FamilyKind::Gnm { avg_degree } => Family::Gnm { n, m: avg_degree * n / 2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub families: Vec<FamilyKind>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub space_modes: Vec<SpaceMode>,
    /// Template for every trial; mode, space mode and seed are overwritten.
    pub base: RunSettings,
}

/// One trial of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub family: Family,
    pub seed: u64,
    pub settings: RunSettings,
}

impl SweepGrid {
    /// Trials in row order: family, size, seed, mode, space mode.
    pub fn trials(&self) -> Vec<Trial> {
        let mut out = Vec::new();
        for &kind in &self.families {
            for &n in &self.sizes {
                for &seed in &self.seeds {
                    for &mode in &self.modes {
                        for &space_mode in &self.space_modes {
                            let mut settings = self.base.clone();
                            settings.mode = mode;
                            settings.space_mode = space_mode;
                            settings.seed = seed;
                            out.push(Trial {
                                family: kind.at(n),
                                seed,
                                settings,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Generates the trial's graph and runs it.
pub fn run_trial(trial: &Trial) -> Result<RunReport, Error> {
    let g = generate(trial.family, trial.seed)?;
    let input = InputDescriptor::generated(&g, trial.family, trial.seed);
    Ok(run_report(&g, input, &trial.settings)?.0)
}

/// Runs every trial, concurrently, and returns reports in trial order.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<RunReport>, Error> {
    grid.trials().par_iter().map(run_trial).collect()
}

/// CSV fields of one report, in [`SWEEP_HEADER`] order.
pub fn csv_row(r: &RunReport) -> Vec<String> {
    vec![
        r.input.family.clone(),
        r.input.n.to_string(),
        r.input.m.to_string(),
        r.input.seed.map_or(String::new(), |s| s.to_string()),
        r.config.seed.to_string(),
        r.config.mode.to_string(),
        r.config.space_mode.to_string(),
        r.config.fidelity.to_string(),
        r.config.epsilon.to_string(),
        r.config.space_coefficient.to_string(),
        r.meters.rounds_elapsed.to_string(),
        r.meters.peak_machine_space.to_string(),
        r.meters.peak_machine_traffic.to_string(),
        r.meters.peak_total_space.to_string(),
        r.result.size.to_string(),
        r.result.valid().to_string(),
        r.phases.len().to_string(),
        r.delta_initial.to_string(),
        r.delta_low.to_string(),
        r.delta_hat.map_or(String::new(), |d| format!("{d:.6}")),
    ]
}

/// Writes the header followed by one row per report.
pub fn write_csv<W: Write>(out: W, reports: &[RunReport], header: bool) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(SWEEP_HEADER)?;
    }
    for r in reports {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Appends rows to `path`, writing the header only when the file is new or empty.
pub fn append_csv(path: &Path, reports: &[RunReport]) -> Result<(), csv::Error> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let header = file.metadata()?.len() == 0;
    write_csv(file, reports, header)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SweepGrid {
        SweepGrid {
            families: vec![FamilyKind::Tree, FamilyKind::Grid, FamilyKind::ForestUnion { alpha: 2 }],
            sizes: vec![64, 200],
            seeds: vec![1, 2],
            modes: vec![Mode::Mis, Mode::Mm],
            space_modes: vec![SpaceMode::Warmup],
            base: RunSettings::new(Mode::Mis),
        }
    }

    #[test]
    fn trial_order_and_count() {
        let t = grid().trials();
        assert_eq!(t.len(), 3 * 2 * 2 * 2);
        assert_eq!(t[0].family, Family::Tree { n: 64 });
        assert_eq!(t[1].settings.mode, Mode::Mm);
        assert_eq!(t[2].seed, 2);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("tree".parse::<FamilyKind>().unwrap(), FamilyKind::Tree);
        assert_eq!("forest_union".parse::<FamilyKind>().unwrap(), FamilyKind::ForestUnion { alpha: 2 });
        assert_eq!("forest_union:4".parse::<FamilyKind>().unwrap(), FamilyKind::ForestUnion { alpha: 4 });
        assert_eq!("gnm:6".parse::<FamilyKind>().unwrap(), FamilyKind::Gnm { avg_degree: 6 });
        assert!("grid:3".parse::<FamilyKind>().is_err());
        assert!("cycle".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn grid_kind_is_near_square() {
        assert_eq!(FamilyKind::Grid.at(100), Family::Grid { rows: 10, cols: 10 });
        assert_eq!(FamilyKind::Grid.at(1000), Family::Grid { rows: 31, cols: 33 });
    }

    #[test]
    fn reruns_reproduce_rows() {
        let g = grid();
        let render = || {
            let mut buf = Vec::new();
            write_csv(&mut buf, &run_sweep(&g).unwrap(), true).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render();
        assert_eq!(a, render());
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        assert_eq!(lines.count(), 24);
        assert!(!a.contains(",false,"));
    }

    #[test]
    fn append_writes_header_once() {
        let dir = std::env::temp_dir().join(format!("mpcsim-sweep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        let _ = std::fs::remove_file(&path);
        let mut g = grid();
        g.sizes = vec![32];
        g.seeds = vec![1];
        let reports = run_sweep(&g).unwrap();
        append_csv(&path, &reports).unwrap();
        append_csv(&path, &reports).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("family,")).count(), 1);
        assert_eq!(text.lines().count(), 1 + 2 * reports.len());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

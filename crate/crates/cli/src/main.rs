#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mpcsim_core::graph::{generate, load_edge_list, Graph};
use mpcsim_core::harness::{
    append_csv, battery, check_mis, check_mm, format_solution, parse_pairs, parse_vertices, run_battery, run_report,
    run_sweep, write_csv, FamilyKind, InputDescriptor, RunSettings, SweepGrid,
};
use mpcsim_core::symbreak::{Fidelity, Mode, SpaceMode};
use mpcsim_core::ClusterConfig;

#[derive(Parser)]
#[command(name = "mpcsim", version, about = "MPC simulator for MIS and maximal matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Gen(GenArgs),
    /// Run a pipeline and print its report as JSON.
    Run(RunArgs),
    /// Check a result file against a graph.
    Verify(VerifyArgs),
    /// Run a grid of trials and write one CSV row per trial.
    Sweep(SweepArgs),
    /// Compare compressed and round-by-round execution on a battery of cases.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// tree, grid, forest_union[:alpha] or gnm[:avg_degree].
    #[arg(long)]
    family: FamilyKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

/// Settings shared by `run` and `sweep`.
#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long = "space-coeff", default_value_t = 8.0)]
    space_coeff: f64,
    #[arg(long, default_value = "desk")]
    fidelity: Fidelity,
    /// Strict cap mode; defaults to MPCSIM_STRICT, and to strict when that is unset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    strict: Option<u8>,
    /// Fixed degree-reduction threshold in place of the computed one.
    #[arg(long)]
    tau: Option<u64>,
}

impl Common {
    fn settings(&self, mode: Mode, space_mode: SpaceMode, seed: u64) -> RunSettings {
        RunSettings {
            mode,
            epsilon: self.epsilon,
            space_coefficient: self.space_coeff,
            fidelity: self.fidelity,
            space_mode,
            seed,
            strict: self.strict.map_or_else(ClusterConfig::strict_from_env, |s| s == 1),
            tau_override: self.tau,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: Mode,
    /// Edge-list file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "space-mode", default_value = "warmup")]
    space_mode: SpaceMode,
    #[command(flatten)]
    common: Common,
    /// Also write the report JSON here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write the result in the format `verify` reads.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    algo: Mode,
    #[arg(long)]
    input: PathBuf,
    /// Vertex IDs per line for mis, `u v` pairs per line for mm.
    #[arg(long)]
    result: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "tree,grid,forest_union:2")]
    families: Vec<FamilyKind>,
    #[arg(long, value_delimiter = ',', default_value = "256,1024")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long = "algos", value_delimiter = ',', default_value = "mis,mm")]
    algos: Vec<Mode>,
    #[arg(long = "space-modes", value_delimiter = ',', default_value = "warmup")]
    space_modes: Vec<SpaceMode>,
    #[command(flatten)]
    common: Common,
    /// CSV file to append to; stdout when absent.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Also write every report as a JSON array here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write every case and outcome as JSON here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

fn read_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    load_edge_list(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write stdout"),
    }
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let g = generate(a.family.at(a.n), a.seed)?;
    emit(a.output.as_deref(), &g.to_edge_list())?;
    Ok(ExitCode::SUCCESS)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let g = read_graph(&a.input)?;
    let settings = a.common.settings(a.algo, a.space_mode, a.seed);
    let input = InputDescriptor::file(&g, &a.input.display().to_string());
    let (report, solution) = run_report(&g, input, &settings)?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(p) = &a.metrics {
        fs::write(p, &json).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(p) = &a.output {
        fs::write(p, format_solution(&solution)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    println!("{json}");
    Ok(if report.result.valid() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let g = read_graph(&a.input)?;
    let text = fs::read_to_string(&a.result).with_context(|| format!("cannot read {}", a.result.display()))?;
    let verdict = match a.algo {
        Mode::Mis => check_mis(&g, &parse_vertices(&text)?),
        Mode::Mm => check_mm(&g, &parse_pairs(&text)?),
    };
    println!("{}", serde_json::to_string(&verdict)?);
    Ok(if verdict.valid { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    if a.families.is_empty() || a.sizes.is_empty() || a.seeds.is_empty() {
        bail!("sweep needs at least one family, size and seed");
    }
    let first = a.algos.first().copied().unwrap_or(Mode::Mis);
    let grid = SweepGrid {
        families: a.families,
        sizes: a.sizes,
        seeds: a.seeds,
        modes: a.algos,
        space_modes: a.space_modes,
        base: a.common.settings(first, SpaceMode::Warmup, 0),
    };
    let reports = run_sweep(&grid)?;
    match &a.output {
        Some(p) => append_csv(p, &reports).with_context(|| format!("cannot write {}", p.display()))?,
        None => write_csv(io::stdout(), &reports, true)?,
    }
    if let Some(p) = &a.metrics {
        fs::write(p, serde_json::to_string_pretty(&reports)?).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let all_valid = reports.iter().all(|r| r.result.valid());
    Ok(if all_valid { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let summary = run_battery(&battery(a.n, a.trials, a.seed))?;
    if let Some(p) = &a.metrics {
        fs::write(p, serde_json::to_string_pretty(&summary)?).with_context(|| format!("cannot write {}", p.display()))?;
    }
    for o in summary.outcomes.iter().filter(|o| !o.equal) {
        eprintln!("mismatch: {}", serde_json::to_string(o)?);
    }
    println!("{}/{} bit-equal", summary.equal, summary.cases);
    Ok(if summary.equal == summary.cases { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(a) => oracle(a),
    };
    out.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

//! Checkers, reports, sweeps and the equivalence battery.

pub mod check;
pub mod io;
pub mod oracle;
pub mod report;
pub mod sweep;

pub use check::{check_cover, check_mis, check_mm, Verdict};
pub use io::{format_solution, parse_pairs, parse_vertices};
pub use oracle::{battery, run_battery, run_case, OracleCase, OracleOutcome, OracleRule, OracleSummary};
pub use report::{run_report, summarize, InputDescriptor, ResultSummary, RunReport, RunSettings, SCHEMA_VERSION};
pub use sweep::{append_csv, run_sweep, write_csv, FamilyKind, SweepGrid, Trial, SWEEP_HEADER};

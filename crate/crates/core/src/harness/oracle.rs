//! Equivalence battery: compressed execution against round-by-round simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, SimFault};
use crate::graph::{generate, Family};
use crate::hash::mix3;
use crate::local::{blind_coordinate, simulate_direct, LocalRule, RandomTape};
use crate::primitives::hops::default_ball_budget;
use crate::runtime::{Cluster, ClusterConfig};
use crate::symbreak::{israeli_itai_rule, luby_rule, DegreeReductionParams, DegreeReductionRule, Fidelity, Mode};

/// Space coefficient of oracle clusters, large enough for radius-3 balls on sparse inputs.
pub const ORACLE_SPACE_COEFF: f64 = 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleRule {
    Luby,
    IsraeliItai,
    ReductionMis,
    ReductionMm,
}

const RULES: [OracleRule; 4] = [
    OracleRule::Luby,
    OracleRule::IsraeliItai,
    OracleRule::ReductionMis,
    OracleRule::ReductionMm,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub family: Family,
    pub graph_seed: u64,
    pub rule: OracleRule,
    pub tape_seed: u64,
    /// Rounds simulated.
    pub r: u64,
    /// Rounds replayed per epoch.
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub case: OracleCase,
    pub equal: bool,
    /// Fault raised by either execution.
    pub fault: Option<String>,
    pub compressed_rounds: u64,
    pub direct_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub cases: usize,
    pub equal: usize,
    pub outcomes: Vec<OracleOutcome>,
}

/// `trials` cases on graphs of about `n` vertices. Cases cycle through
/// families, rules, `t` in 1..=3 and `r` in `{0, t - 1, t, 4t, 2t + 1}`.
pub fn battery(n: usize, trials: usize, seed: u64) -> Vec<OracleCase> {
    let n = n.max(2);
    let side = (n as f64).sqrt().ceil() as usize;
    let families = [
        Family::Tree { n },
        Family::ForestUnion { n, alpha: 2 },
        Family::Grid { rows: side, cols: n.div_ceil(side) },
        Family::ForestUnion { n, alpha: 1 },
        Family::Gnm { n, m: n },
    ];
    (0..trials)
        .map(|i| {
            let t = 1 + (i / 5 % 3) as u64;
            let r = match i % 5 {
                0 => 0,
                1 => t - 1,
                2 => t,
                3 => 4 * t,
                _ => 2 * t + 1,
            };
            OracleCase {
                family: families[i % families.len()],
                graph_seed: mix3(seed, i as u64, 1),
                rule: RULES[i / 3 % RULES.len()],
                tape_seed: mix3(seed, i as u64, 2),
                r,
                t,
            }
        })
        .collect()
}

fn cluster(g: &crate::graph::Graph) -> Result<Cluster, SimFault> {
    Cluster::init(ClusterConfig::for_graph(g, 0.5, ORACLE_SPACE_COEFF, true)?, g)
}

/// Runs both executions of one case on separate clusters.
pub fn run_case(case: &OracleCase) -> Result<OracleOutcome, Error> {
    let g = generate(case.family, case.graph_seed)?;
    let th = DegreeReductionParams::new(Mode::Mis, Fidelity::Desk).thresholds(g.max_degree().max(2));
    let rule: Box<dyn LocalRule> = match case.rule {
        OracleRule::Luby => Box::new(luby_rule()),
        OracleRule::IsraeliItai => Box::new(israeli_itai_rule()),
        OracleRule::ReductionMis => Box::new(DegreeReductionRule::new(th, Mode::Mis)),
        OracleRule::ReductionMm => Box::new(DegreeReductionRule::new(th, Mode::Mm)),
    };
    let tape = RandomTape::new(case.tape_seed);
    let mut direct = cluster(&g)?;
    let mut compressed = cluster(&g)?;
    let budget = default_ball_budget(&compressed);
    let expected = simulate_direct(&mut direct, rule.as_ref(), tape, case.r)?;
    let got = blind_coordinate(&mut compressed, rule.as_ref(), tape, case.r, case.t, budget);
    let (equal, fault) = match got {
        Ok(s) => (s == expected, None),
        Err(e) => (false, Some(e.to_string())),
    };
    Ok(OracleOutcome {
        case: case.clone(),
        equal,
        fault,
        compressed_rounds: compressed.report().rounds_elapsed,
        direct_rounds: direct.report().rounds_elapsed,
    })
}

pub fn run_battery(cases: &[OracleCase]) -> Result<OracleSummary, Error> {
    let outcomes = cases.iter().map(run_case).collect::<Result<Vec<_>, _>>()?;
    Ok(OracleSummary {
        cases: outcomes.len(),
        equal: outcomes.iter().filter(|o| o.equal).count(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_covers_required_round_counts() {
        let cases = battery(128, 60, 0);
        assert!(cases.iter().any(|c| c.r == 0));
        assert!(cases.iter().any(|c| c.r > 0 && c.r < c.t));
        assert!(cases.iter().any(|c| c.r == 4 * c.t));
        for rule in RULES {
            assert!(cases.iter().any(|c| c.rule == rule));
        }
    }

    #[test]
    fn small_battery_is_bit_equal() {
        let s = run_battery(&battery(96, 20, 4)).unwrap();
        let bad: Vec<_> = s.outcomes.iter().filter(|o| !o.equal).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn compressed_run_is_shorter_for_long_windows() {
        let case = OracleCase {
            family: Family::ForestUnion { n: 256, alpha: 2 },
            graph_seed: 3,
            rule: OracleRule::Luby,
            tape_seed: 9,
            r: 12,
            t: 3,
        };
        let o = run_case(&case).unwrap();
        assert!(o.equal, "{o:?}");
        assert!(o.compressed_rounds < o.direct_rounds);
    }
}

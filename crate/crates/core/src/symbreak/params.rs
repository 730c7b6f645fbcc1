use serde::{Deserialize, Serialize};

use crate::error::SimFault;

/// Which problem is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mis,
    Mm,
}

/// Constant regime for the degree-reduction thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// `tau = max((5a)^16, (5 c log n)^14)`, `beta = D^(1/14)`.
    Faithful,
    /// `tau = max(a^2, (2 log2 n)^2)`, `beta = D^(1/4)`.
    Desk,
}

/// Whether neighborhoods are collected around every vertex or only around
/// high-degree vertices under a capacity schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceMode {
    Warmup,
    Optimized,
}

macro_rules! parse_enum {
    ($t:ty, $what:literal, $($s:literal => $v:path),+) => {
        impl std::str::FromStr for $t {
            type Err = SimFault;
            fn from_str(s: &str) -> Result<Self, SimFault> {
                match s {
                    $($s => Ok($v),)+
                    other => Err(SimFault::Argument(format!(concat!("unknown ", $what, " {:?}"), other))),
                }
            }
        }

        impl std::fmt::Display for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                let name = match self {
                    $($v => $s,)+
                };
                f.write_str(name)
            }
        }
    };
}

parse_enum!(Mode, "algorithm", "mis" => Mode::Mis, "mm" => Mode::Mm);
parse_enum!(Fidelity, "fidelity", "faithful" => Fidelity::Faithful, "desk" => Fidelity::Desk);
parse_enum!(SpaceMode, "space mode", "warmup" => SpaceMode::Warmup, "optimized" => SpaceMode::Optimized);

/// Thresholds of the degree-reduction stage.
///
/// `tau = max((alpha_coeff * alpha_hat)^tau_alpha_exp, (log_coeff * log2 n)^tau_log_exp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeReductionParams {
    pub mode: Mode,
    pub fidelity: Fidelity,
    pub tau_alpha_exp: f64,
    pub tau_log_exp: f64,
    pub alpha_coeff: f64,
    pub log_coeff: f64,
    /// `beta = D^beta_exp`.
    pub beta_exp: f64,
    /// Arboricity hint; `None` leaves only the logarithmic term in `tau`.
    pub alpha_hat: Option<f64>,
    /// Replaces the computed `tau`.
    pub tau_override: Option<u64>,
}

impl DegreeReductionParams {
    pub fn new(mode: Mode, fidelity: Fidelity) -> Self {
        match fidelity {
            Fidelity::Faithful => DegreeReductionParams {
                mode,
                fidelity,
                tau_alpha_exp: 16.0,
                tau_log_exp: 14.0,
                alpha_coeff: 5.0,
                log_coeff: 5.0,
                beta_exp: 1.0 / 14.0,
                alpha_hat: None,
                tau_override: None,
            },
            Fidelity::Desk => DegreeReductionParams {
                mode,
                fidelity,
                tau_alpha_exp: 2.0,
                tau_log_exp: 2.0,
                alpha_coeff: 1.0,
                log_coeff: 2.0,
                beta_exp: 0.25,
                alpha_hat: None,
                tau_override: None,
            },
        }
    }

    pub fn with_tau(mut self, tau: u64) -> Self {
        self.tau_override = Some(tau);
        self
    }

    pub fn with_alpha_hint(mut self, alpha: f64) -> Self {
        self.alpha_hat = Some(alpha);
        self
    }

    /// Degree threshold below which degree reduction is not attempted.
    /// Saturates at `u64::MAX`.
    pub fn tau(&self, n: usize) -> u64 {
        if let Some(t) = self.tau_override {
            return t;
        }
        let log = (n.max(2) as f64).log2();
        let by_log = (self.log_coeff * log).powf(self.tau_log_exp);
        let by_alpha = self
            .alpha_hat
            .map_or(0.0, |a| (self.alpha_coeff * a).powf(self.tau_alpha_exp));
        let tau = by_log.max(by_alpha).ceil();
        if tau >= u64::MAX as f64 {
            u64::MAX
        } else {
            tau as u64
        }
    }

    /// Per-call thresholds at maximum degree `delta`.
    pub fn thresholds(&self, delta: usize) -> Thresholds {
        let high = ceil_sqrt(delta as u64).max(1);
        Thresholds {
            delta,
            high: high as u32,
            leaf_pick: (high / 2).max(1) as u32,
            beta: (delta.max(1) as f64).powf(self.beta_exp),
        }
    }
}

/// Thresholds shared by every execution path of one degree-reduction call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub delta: usize,
    /// High-degree iff `deg >= high`, with `high = ceil(sqrt(D))`.
    pub high: u32,
    /// Low-degree edges an exposed vertex keeps, `max(1, floor(ceil(sqrt(D)) / 2))`.
    pub leaf_pick: u32,
    pub beta: f64,
}

impl Thresholds {
    /// Good-leaf test on the number of kept exposed neighbors and leaf neighbors.
    pub fn good(&self, exposed: u64, leaves: u64) -> bool {
        (exposed as f64) < self.beta && (leaves as f64) < self.beta * self.beta
    }
}

/// Smallest `r` with `r * r >= x`.
pub fn ceil_sqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r < x {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= x {
        r -= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_sqrt_small() {
        let got: Vec<u64> = (0..11).map(ceil_sqrt).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 2, 3, 3, 3, 3, 3, 4]);
        assert_eq!(ceil_sqrt(1 << 40), 1 << 20);
        assert_eq!(ceil_sqrt((1 << 40) + 1), (1 << 20) + 1);
    }

    #[test]
    fn desk_tau_is_squared_log() {
        let p = DegreeReductionParams::new(Mode::Mis, Fidelity::Desk);
        assert_eq!(p.tau(1 << 16), 1024);
        assert_eq!(p.with_alpha_hint(40.0).tau(1 << 16), 1600);
        assert_eq!(p.with_tau(7).tau(1 << 16), 7);
    }

    #[test]
    fn faithful_tau_dwarfs_any_desk_degree() {
        let p = DegreeReductionParams::new(Mode::Mm, Fidelity::Faithful);
        assert!(p.tau(1 << 10) > 1 << 40);
    }

    #[test]
    fn star_thresholds() {
        let t = DegreeReductionParams::new(Mode::Mm, Fidelity::Desk).thresholds(16);
        assert_eq!((t.high, t.leaf_pick), (4, 2));
        assert_eq!(t.beta, 2.0);
        assert!(t.good(1, 3));
        assert!(!t.good(2, 0));
        assert!(!t.good(1, 4));
        let one = DegreeReductionParams::new(Mode::Mis, Fidelity::Desk).thresholds(1);
        assert_eq!((one.high, one.leaf_pick), (1, 1));
    }

    #[test]
    fn names_round_trip() {
        for m in [Mode::Mis, Mode::Mm] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("xyz".parse::<SpaceMode>().is_err());
        assert_eq!("optimized".parse::<SpaceMode>().unwrap(), SpaceMode::Optimized);
    }
}

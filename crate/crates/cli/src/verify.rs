use std::path::Path;
use std::str::FromStr;

use ks1d::analysis::{
    check_apriori, check_distribution_limit, check_eigenvalue_bounds, check_monotonicity,
    check_trace_identity, check_uniqueness, m_bar, monotonicity_tolerance, random_trace_instance,
    CheckStatus, GAMMA_EMBEDDING,
};
use ks1d::grid::NodalField;
use ks1d::scf::{solve_scf, Device};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::write_json;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Bounds,
    Trace,
    Monotonicity,
    Apriori,
    Uniqueness,
    Limit,
}

pub const ALL_SUITES: [Suite; 6] = [
    Suite::Bounds,
    Suite::Trace,
    Suite::Monotonicity,
    Suite::Apriori,
    Suite::Uniqueness,
    Suite::Limit,
];

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "bounds" => Suite::Bounds,
            "trace" => Suite::Trace,
            "monotonicity" => Suite::Monotonicity,
            "apriori" => Suite::Apriori,
            "uniqueness" => Suite::Uniqueness,
            "limit" => Suite::Limit,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown suite {s:?}; expected bounds, trace, monotonicity, apriori, uniqueness or limit"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub suite: Suite,
    pub status: CheckStatus,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub gamma: f64,
    /// Monotonicity constant `M = ess inf eps / 2`.
    pub monotonicity_constant: f64,
    pub m_bar: f64,
    /// Most negative `rho_V` among the sampled potentials.
    pub rho_v: Option<f64>,
    /// Number of discrete Schrodinger or Kohn-Sham solves performed.
    pub pde_solves: usize,
    pub checks: Vec<CheckEntry>,
    pub overall: CheckStatus,
}

const BOUND_POTENTIALS: usize = 10;
const TRACE_INSTANCES: usize = 20;
const MONOTONICITY_PAIRS: usize = 10;
const UNIQUENESS_STARTS: usize = 3;

fn smooth_potential(device: &Device, rng: &mut StdRng, l1: f64) -> NodalField {
    let modes: Vec<(f64, f64)> = (1..=5)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let v = NodalField::from_fn(&device.grid, |x| {
        modes
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * ((k + 1) as f64 * std::f64::consts::PI * x + p).sin())
            .sum()
    });
    let norm = device.grid.norm_l1(&v);
    v.map(|x| x * l1 / norm)
}

pub fn run_verify(cfg: &RunConfig, suites: &[Suite], seed: u64) -> Result<VerifyReport, CliError> {
    let mut suites = suites.to_vec();
    suites.sort();
    suites.dedup();
    let mut rng = StdRng::seed_from_u64(seed);
    let f = &cfg.distribution;
    let needs_device = suites
        .iter()
        .any(|s| !matches!(s, Suite::Trace | Suite::Limit));
    let device = if needs_device {
        Some(cfg.device()?)
    } else {
        None
    };
    let mut solves = 0;
    let mut rho_min: Option<f64> = None;
    let mut checks = Vec::new();

    for suite in suites {
        let (status, details) = match suite {
            Suite::Bounds => {
                let d = device.as_ref().expect("device built for this suite");
                let levels = d.grid.n_interior().min(10);
                let mut status = CheckStatus::Pass;
                let mut worst = f64::INFINITY;
                for _ in 0..BOUND_POTENTIALS {
                    let l1 = rng.gen_range(0.1..10.0);
                    let v = smooth_potential(d, &mut rng, l1);
                    let r = check_eigenvalue_bounds(d, &v, levels)?;
                    solves += 2;
                    status = status.and(r.status);
                    worst = worst.min(r.worst_margin);
                    rho_min = Some(rho_min.map_or(r.rho_v, |x: f64| x.min(r.rho_v)));
                }
                (
                    status,
                    json!({ "potentials": BOUND_POTENTIALS, "levels": levels, "worst_margin": worst }),
                )
            }
            Suite::Trace => {
                let mut worst: f64 = 0.0;
                for i in 0..TRACE_INSTANCES {
                    let n = rng.gen_range(2..=50);
                    let (h, u, v) = random_trace_instance(n, i % 2 == 1, &mut rng);
                    worst = worst.max(check_trace_identity(&h, &u, &v, f)?.relative_gap());
                }
                let status = if worst <= 1e-10 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                (
                    status,
                    json!({ "instances": TRACE_INSTANCES, "max_relative_gap": worst, "tolerance": 1e-10 }),
                )
            }
            Suite::Monotonicity => {
                let d = device.as_ref().expect("device built for this suite");
                let mut worst = f64::NEG_INFINITY;
                let mut violations = 0;
                for _ in 0..MONOTONICITY_PAIRS {
                    let (a, b) = (rng.gen_range(0.5..30.0), rng.gen_range(0.5..30.0));
                    let u = smooth_potential(d, &mut rng, a).add(&d.band_offset);
                    let v = smooth_potential(d, &mut rng, b).add(&d.band_offset);
                    let tol = monotonicity_tolerance(d, &u, &v);
                    let i = check_monotonicity(d, &u, &v, f, cfg.scf.particles, cfg.scf.tail_tol)?;
                    solves += 2;
                    worst = worst.max(i / tol);
                    if i > tol {
                        violations += 1;
                    }
                }
                let status = if violations == 0 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                (
                    status,
                    json!({ "pairs": MONOTONICITY_PAIRS, "violations": violations, "max_ratio_to_tolerance": worst }),
                )
            }
            Suite::Apriori => {
                let d = device.as_ref().expect("device built for this suite");
                let r = solve_scf(d, f, &cfg.xc, &cfg.scf, None)?;
                solves += 1;
                let a = check_apriori(&r, d, &cfg.scf)?;
                let status = if a.pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                (
                    status,
                    json!({ "lhs": a.lhs, "rhs": a.rhs, "doping_dual_norm": a.doping_dual_norm, "converged": r.converged }),
                )
            }
            Suite::Uniqueness => {
                let d = device.as_ref().expect("device built for this suite");
                if !cfg.xc.is_none() {
                    (
                        CheckStatus::Inconclusive,
                        json!({ "reason": "requires xc = none" }),
                    )
                } else {
                    let r =
                        check_uniqueness(d, f, &cfg.xc, &cfg.scf, UNIQUENESS_STARTS, rng.gen())?;
                    solves += UNIQUENESS_STARTS;
                    let pass = r.all_converged && r.max_distance <= 1e-7;
                    let status = if pass {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                    (
                        status,
                        json!({ "starts": r.starts, "max_distance": r.max_distance, "all_converged": r.all_converged, "tolerance": 1e-7 }),
                    )
                }
            }
            Suite::Limit => {
                let schedule: Vec<f64> = (0..=12).map(|j| 2f64.powi(j)).collect();
                let d = check_distribution_limit(&schedule, -1.0)?;
                let decreasing = d.windows(2).all(|w| w[1] < w[0]);
                let last = *d.last().expect("schedule is not empty");
                let status = if decreasing && last <= 1e-3 {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                (
                    status,
                    json!({ "schedule": schedule, "distances": d, "strictly_decreasing": decreasing }),
                )
            }
        };
        checks.push(CheckEntry {
            suite,
            status,
            details,
        });
    }

    let overall = checks
        .iter()
        .fold(CheckStatus::Pass, |s, c| s.and(c.status));
    let eps_min = cfg
        .stack
        .layers()
        .iter()
        .map(|l| l.permittivity)
        .fold(f64::INFINITY, f64::min);
    let mass_max = cfg
        .stack
        .layers()
        .iter()
        .map(|l| l.mass)
        .fold(0.0, f64::max);
    Ok(VerifyReport {
        seed,
        gamma: GAMMA_EMBEDDING,
        monotonicity_constant: 0.5 * eps_min,
        m_bar: m_bar(mass_max),
        rho_v: rho_min,
        pde_solves: solves,
        checks,
        overall,
    })
}

pub fn write_report(report: &VerifyReport, dir: &Path) -> Result<(), CliError> {
    write_json(&dir.join("verify.json"), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn suites_parse() {
        let s: Vec<Suite> = crate::parse_list("trace,limit").unwrap();
        assert_eq!(s, vec![Suite::Trace, Suite::Limit]);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn limit_suite_needs_no_device() {
        let cfg = parse("[device.layer.1]\nthickness = 1.0\n").unwrap();
        let r = run_verify(&cfg, &[Suite::Limit, Suite::Limit], 0).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.pde_solves, 0);
        assert_eq!(r.overall, CheckStatus::Pass);
        assert!(r.rho_v.is_none());
    }

    #[test]
    fn uniqueness_is_inconclusive_with_exchange() {
        let cfg = parse("[device.layer.1]\nthickness = 1.0\n[grid]\nn = 50\n[xc]\nkind = \"xalpha\"\nc = 1.0\nalpha = 0.5\n")
            .unwrap();
        let r = run_verify(&cfg, &[Suite::Uniqueness], 0).unwrap();
        assert_eq!(r.checks[0].status, CheckStatus::Inconclusive);
    }
}

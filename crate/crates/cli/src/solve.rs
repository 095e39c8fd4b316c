use std::path::Path;

use ks1d::analysis::{check_apriori, check_eigenvalue_bounds, AprioriReport, CheckStatus};
use ks1d::scf::{solve_scf, Device, ScfResult};
use ks1d::statistics::Temperature;
use serde::Serialize;

use crate::config::{RunConfig, UnitScale};
use crate::output::{profile_table, write_json, write_text};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self {
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsCheck {
    pub levels: usize,
    pub worst_margin: f64,
    pub rho_v: f64,
    pub m_bar: f64,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    /// `|int u - N|`.
    pub conservation: Check,
    /// `||Phi(u) - u||_{L^1}` against `2 tol_l1`.
    pub fixed_point: Check,
    /// `-min u` against `1e-12`.
    pub positivity: Check,
    pub apriori: AprioriReport,
    pub eigenvalue_bounds: BoundsCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct Distribution {
    pub kind: &'static str,
    pub beta: Option<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub converged: bool,
    pub iterations: usize,
    pub mu: f64,
    pub eigenvalues: Vec<f64>,
    pub occupations: Vec<f64>,
    pub tail_bound: f64,
    pub residual_history: Vec<f64>,
    pub fixed_point_residual: f64,
    pub final_damping: f64,
    pub particles: f64,
    pub charge: f64,
    pub elements: usize,
    pub integral_u: f64,
    pub u_linf: f64,
    pub phi_linf: f64,
    pub distribution: Distribution,
    pub units: UnitScale,
    pub checks: Checks,
}

pub fn solve(cfg: &RunConfig) -> Result<(Device, ScfResult), CliError> {
    let device = cfg.device()?;
    let result = solve_scf(&device, &cfg.distribution, &cfg.xc, &cfg.scf, None)?;
    Ok((device, result))
}

pub fn summarize(cfg: &RunConfig, device: &Device, r: &ScfResult) -> Result<Summary, CliError> {
    let grid = &device.grid;
    let integral_u = grid.integrate(&r.density);
    let min_u = r.density.iter().copied().fold(f64::INFINITY, f64::min);
    let levels = r.spectrum.len().min(grid.n_interior());
    let bounds = check_eigenvalue_bounds(device, &r.effective_potential, levels)?;
    let checks = Checks {
        conservation: Check::at_most(
            (integral_u - cfg.scf.particles).abs(),
            cfg.scf.tail_tol + 1e-9,
        ),
        fixed_point: Check::at_most(r.fixed_point_residual, 2.0 * cfg.scf.tol_l1),
        positivity: Check::at_most(-min_u, 1e-12),
        apriori: check_apriori(r, device, &cfg.scf)?,
        eigenvalue_bounds: BoundsCheck {
            levels,
            worst_margin: bounds.worst_margin,
            rho_v: bounds.rho_v,
            m_bar: bounds.m_bar,
            status: bounds.status,
        },
    };
    let f = &r.distribution;
    Ok(Summary {
        converged: r.converged,
        iterations: r.iterations,
        mu: r.occupation.mu,
        eigenvalues: r.spectrum.eigenvalues.clone(),
        occupations: r.occupation.occupations.clone(),
        tail_bound: r.occupation.tail_bound,
        residual_history: r.residual_history.clone(),
        fixed_point_residual: r.fixed_point_residual,
        final_damping: r.final_damping,
        particles: cfg.scf.particles,
        charge: cfg.scf.charge,
        elements: grid.n_elements(),
        integral_u,
        u_linf: grid.norm_linf(&r.density),
        phi_linf: grid.norm_linf(&r.phi),
        distribution: Distribution {
            kind: match f.temperature {
                Temperature::Zero => "zero",
                Temperature::Finite(_) => "fermi",
            },
            beta: f.beta(),
            scale: f.scale,
        },
        units: cfg.units,
        checks,
    })
}

/// Solve and write the profile table and summary into `dir`.
pub fn run_solve(cfg: &RunConfig, dir: &Path) -> Result<(Outcome, Summary), CliError> {
    let (device, r) = solve(cfg)?;
    let summary = summarize(cfg, &device, &r)?;
    write_text(
        &dir.join(&cfg.raw.output.profile),
        &profile_table(&device.grid, &r.density, &r.phi, &r.effective_potential),
    )?;
    write_json(&dir.join(&cfg.raw.output.summary), &summary)?;
    let outcome = if r.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    };
    Ok((outcome, summary))
}

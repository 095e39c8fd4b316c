//! The Kohn-Sham fixed-point map, the damped self-consistent iteration and
//! the continuation in temperature towards the zero-temperature solution.

use serde::Serialize;

use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};
use crate::grid::{build_grid, sample_layers, Coefficients, Grid, LayerStack, NodalField};
use crate::operators::{lift_boundary, solve_poisson};
use crate::statistics::{density_operator, DistributionFunction, OccupationSummary};
use crate::xc::{evaluate_vxc, XcModel};

/// A discretized layer stack with its contact potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub grid: Grid,
    pub coefficients: Coefficients,
    /// Band offset as a nodal field (lumped-consistent average at interfaces).
    pub band_offset: NodalField,
    pub phi0: f64,
    pub phi1: f64,
}

impl Device {
    pub fn new(stack: &LayerStack, elements: usize, phi0: f64, phi1: f64) -> Result<Self> {
        if !phi0.is_finite() || !phi1.is_finite() {
            return Err(Error::Domain("boundary potentials must be finite".into()));
        }
        let grid = build_grid(elements, stack)?;
        let coefficients = sample_layers(stack, &grid)?;
        let band_offset = grid.element_to_nodal(&coefficients.band_offset);
        Ok(Self {
            grid,
            coefficients,
            band_offset,
            phi0,
            phi1,
        })
    }

    /// The boundary lift of the contact potentials.
    pub fn lift(&self) -> Result<NodalField> {
        lift_boundary(
            &self.grid,
            &self.coefficients.permittivity,
            self.phi0,
            self.phi1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScfConfig {
    /// Particle number `N`.
    pub particles: f64,
    /// Carrier charge `q`.
    pub charge: f64,
    /// Damping factor in `(0, 1]`.
    pub damping: f64,
    pub tol_l1: f64,
    pub max_iter: usize,
    pub tail_tol: f64,
    pub adaptive_damping: bool,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            particles: 1.0,
            charge: 1.0,
            damping: 0.3,
            tol_l1: 1e-9,
            max_iter: 200,
            tail_tol: 1e-10,
            adaptive_damping: false,
        }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.particles >= 1.0) || !self.particles.is_finite() {
            return Err(Error::Domain(format!(
                "particles must be >= 1, got {}",
                self.particles
            )));
        }
        if !self.charge.is_finite() {
            return Err(Error::Domain("charge must be finite".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tol_l1 > 0.0) {
            return Err(Error::Domain(format!(
                "tol_l1 must be positive, got {}",
                self.tol_l1
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::Domain(format!(
                "tail_tol must be positive, got {}",
                self.tail_tol
            )));
        }
        Ok(())
    }
}

/// `phi(u) = phi_lift + P^{-1}(D - q u)`.
pub fn electrostatic_potential(u: &NodalField, device: &Device, charge: f64) -> Result<NodalField> {
    solve_poisson(
        &device.grid,
        &device.coefficients.permittivity,
        &device.coefficients.doping,
        u,
        charge,
        device.phi0,
        device.phi1,
    )
}

/// `V = dE + V_xc(u) - q phi(u)`.
pub fn effective_potential(
    u: &NodalField,
    device: &Device,
    xc: &XcModel,
    config: &ScfConfig,
) -> Result<NodalField> {
    Ok(potentials(u, device, xc, config)?.1)
}

fn potentials(
    u: &NodalField,
    device: &Device,
    xc: &XcModel,
    config: &ScfConfig,
) -> Result<(NodalField, NodalField)> {
    let phi = electrostatic_potential(u, device, config.charge)?;
    let vxc = evaluate_vxc(xc, u)?;
    let q = config.charge;
    let v: Vec<f64> = device
        .band_offset
        .iter()
        .zip(vxc.iter().zip(phi.iter()))
        .map(|(de, (x, p))| de + x - q * p)
        .collect();
    Ok((phi, NodalField(v)))
}

/// Everything produced by one application of the Kohn-Sham map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEvaluation {
    pub phi: NodalField,
    pub effective_potential: NodalField,
    pub density: NodalField,
    pub spectrum: Spectrum,
    pub occupation: OccupationSummary,
}

pub fn evaluate_map(
    u: &NodalField,
    device: &Device,
    f: &DistributionFunction,
    xc: &XcModel,
    config: &ScfConfig,
) -> Result<MapEvaluation> {
    let (phi, v) = potentials(u, device, xc, config)?;
    let out = density_operator(
        &v,
        f,
        config.particles,
        &device.grid,
        &device.coefficients.mass,
        config.tail_tol,
    )?;
    Ok(MapEvaluation {
        phi,
        effective_potential: v,
        density: out.density,
        spectrum: out.spectrum,
        occupation: out.occupation,
    })
}

/// `Phi_f(u) = N_f(dE + V_xc(u) - q phi(u))`.
pub fn kohn_sham_map(
    u: &NodalField,
    device: &Device,
    f: &DistributionFunction,
    xc: &XcModel,
    config: &ScfConfig,
) -> Result<NodalField> {
    Ok(evaluate_map(u, device, f, xc, config)?.density)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfResult {
    pub density: NodalField,
    /// Electrostatic potential including the boundary lift.
    pub phi: NodalField,
    pub effective_potential: NodalField,
    pub spectrum: Spectrum,
    pub occupation: OccupationSummary,
    /// `||u_{k+1} - u_k||_{L^1}` per iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `||Phi_f(u) - u||_{L^1}` at the returned density.
    pub fixed_point_residual: f64,
    pub final_damping: f64,
    pub distribution: DistributionFunction,
}

const MIN_DAMPING: f64 = 1e-4;

/// Damped fixed-point iteration `u <- (1 - tau) u + tau Phi_f(u)` from `u0`
/// (default: the uniform density `N`). The returned density is the last
/// iterate at which the map was evaluated, so its fixed-point residual is
/// exactly the reported one.
pub fn solve_scf(
    device: &Device,
    f: &DistributionFunction,
    xc: &XcModel,
    config: &ScfConfig,
    u0: Option<&NodalField>,
) -> Result<ScfResult> {
    config.validate()?;
    let grid = &device.grid;
    let mut u = match u0 {
        Some(u0) => {
            if u0.len() != grid.n_nodes() {
                return Err(Error::Domain(
                    "initial density length must equal node count".into(),
                ));
            }
            if !u0.is_finite() {
                return Err(Error::Domain("initial density must be finite".into()));
            }
            u0.clone()
        }
        None => NodalField::constant(grid, config.particles),
    };
    let mut tau = config.damping;
    let mut history = Vec::new();
    let mut last_eval = None;
    let mut fixed_res = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        let eval = evaluate_map(&u, device, f, xc, config)?;
        iterations += 1;
        if !eval.density.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite density after {iterations} iterations"
            )));
        }
        let diff = eval.density.sub(&u);
        fixed_res = grid.norm_l1(&diff);
        let step = tau * fixed_res;
        if fixed_res <= config.tol_l1 {
            history.push(step);
            converged = true;
            last_eval = Some(eval);
            break;
        }
        if config.adaptive_damping {
            if let Some(&prev) = history.last() {
                if step > prev && tau > MIN_DAMPING {
                    tau = (0.5 * tau).max(MIN_DAMPING);
                }
            }
        }
        history.push(step);
        if iterations == config.max_iter {
            last_eval = Some(eval);
            break;
        }
        u = u.combine(1.0 - tau, &eval.density, tau);
        if !u.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite iterate after {iterations} iterations"
            )));
        }
    }

    let eval = last_eval.expect("max_iter >= 1 guarantees one evaluation");
    Ok(ScfResult {
        density: u,
        phi: eval.phi,
        effective_potential: eval.effective_potential,
        spectrum: eval.spectrum,
        occupation: eval.occupation,
        residual_history: history,
        iterations,
        converged,
        fixed_point_residual: fixed_res,
        final_damping: tau,
        distribution: *f,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStage {
    /// Inverse temperature; infinite for zero temperature.
    pub beta: f64,
    pub result: ScfResult,
    /// `||u_beta - u_0||_{L^1}` against the zero-temperature solution.
    pub density_distance: f64,
    /// `||phi_beta - phi_0||_{L^inf}`.
    pub potential_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub stages: Vec<ContinuationStage>,
    pub zero_temperature: ScfResult,
}

/// Solve along an ascending inverse-temperature schedule (a final
/// `f64::INFINITY` means zero temperature), warm-starting every stage from
/// the previous solution, and measure each stage against the
/// zero-temperature solution.
pub fn temperature_continuation(
    device: &Device,
    schedule: &[f64],
    scale: f64,
    xc: &XcModel,
    config: &ScfConfig,
) -> Result<Continuation> {
    if schedule.is_empty() {
        return Err(Error::InvalidRequest("empty temperature schedule".into()));
    }
    if let Some(w) = schedule.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidRequest(format!(
            "schedule must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    let mut results: Vec<(f64, ScfResult)> = Vec::with_capacity(schedule.len());
    for &beta in schedule {
        let f = DistributionFunction::fermi(beta)?.with_scale(scale)?;
        let start = results.last().map(|(_, r)| &r.density);
        let r = solve_scf(device, &f, xc, config, start)?;
        results.push((beta, r));
    }
    let zero = match results.last() {
        Some((b, r)) if b.is_infinite() => r.clone(),
        _ => {
            let f = DistributionFunction::zero_temperature().with_scale(scale)?;
            let start = results.last().map(|(_, r)| &r.density);
            solve_scf(device, &f, xc, config, start)?
        }
    };
    let grid = &device.grid;
    let stages = results
        .into_iter()
        .map(|(beta, result)| {
            let density_distance = grid.norm_l1(&result.density.sub(&zero.density));
            let potential_distance = grid.norm_linf(&result.phi.sub(&zero.phi));
            ContinuationStage {
                beta,
                result,
                density_distance,
                potential_distance,
            }
        })
        .collect();
    Ok(Continuation {
        stages,
        zero_temperature: zero,
    })
}

//! Numerical checks of the analytic properties of the model: eigenvalue
//! sandwich bounds, the trace identity behind monotonicity, the monotonicity
//! of the density operator itself, the a priori bound on the electrostatic
//! potential, uniqueness of the self-consistent solution and the
//! zero-temperature limit of the distribution functions.

use faer::{Mat, Side};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::eigensolver::lowest_eigenpairs;
use crate::error::{Error, Result};
use crate::grid::NodalField;
use crate::operators::assemble_schrodinger;
use crate::scf::{solve_scf, Device, ScfConfig, ScfResult};
use crate::statistics::{density_operator, weighted_sup_distance, DistributionFunction};
use crate::xc::XcModel;

/// Embedding constant `L^1 -> W^{-1,2}` under the full-norm convention.
pub const GAMMA_EMBEDDING: f64 = std::f64::consts::SQRT_2;

/// Violations smaller than this are attributed to discretization.
pub const INCONCLUSIVE_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl CheckStatus {
    fn from_margin(margin: f64, slack: f64) -> Self {
        if margin >= 0.0 {
            CheckStatus::Pass
        } else if margin >= -slack {
            CheckStatus::Inconclusive
        } else {
            CheckStatus::Fail
        }
    }

    /// Combine two statuses keeping the worse one.
    pub fn and(self, other: CheckStatus) -> CheckStatus {
        use CheckStatus::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub observed: Vec<f64>,
    /// Eigenvalues of the potential-free operator.
    pub reference: Vec<f64>,
    pub rho_v: f64,
    pub m_bar: f64,
    pub potential_l1: f64,
    pub worst_margin: f64,
    pub status: CheckStatus,
    pub pass: bool,
}

/// `rho_V = -2 ||V||_{L^1}^2 m_bar - 1`.
pub fn rho_v(potential_l1: f64, m_bar: f64) -> f64 {
    -2.0 * potential_l1 * potential_l1 * m_bar - 1.0
}

/// `max(1, 2 ||m||_inf / hbar^2)` with `hbar^2 = 2`.
pub fn m_bar(max_mass: f64) -> f64 {
    max_mass.max(1.0)
}

/// Sandwich `(s_l + 1)/2 + rho_V <= lambda_l(V) <= 3/2 (s_l + 1) - rho_V - 2`
/// for the first `levels` eigenvalues, `s_l` those of the potential-free
/// operator with the same mass profile.
pub fn check_eigenvalue_bounds(
    device: &Device,
    potential: &NodalField,
    levels: usize,
) -> Result<BoundReport> {
    let grid = &device.grid;
    let mass = &device.coefficients.mass;
    let h0 = assemble_schrodinger(grid, mass, &NodalField::zeros(grid))?;
    let hv = assemble_schrodinger(grid, mass, potential)?;
    let reference = lowest_eigenpairs(&h0, levels)?.eigenvalues;
    let observed = lowest_eigenpairs(&hv, levels)?.eigenvalues;
    let potential_l1 = grid.norm_l1(potential);
    let mb = m_bar(mass.max());
    let rho = rho_v(potential_l1, mb);
    let lower: Vec<f64> = reference.iter().map(|s| 0.5 * (s + 1.0) + rho).collect();
    let upper: Vec<f64> = reference
        .iter()
        .map(|s| 1.5 * (s + 1.0) - rho - 2.0)
        .collect();
    let mut worst = f64::INFINITY;
    let mut status = CheckStatus::Pass;
    for l in 0..levels {
        let m = (observed[l] - lower[l]).min(upper[l] - observed[l]);
        worst = worst.min(m);
        status = status.and(CheckStatus::from_margin(m, INCONCLUSIVE_MARGIN));
    }
    Ok(BoundReport {
        lower,
        upper,
        observed,
        reference,
        rho_v: rho,
        m_bar: mb,
        potential_l1,
        worst_margin: worst,
        pass: status == CheckStatus::Pass,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl TraceReport {
    pub fn relative_gap(&self) -> f64 {
        self.gap / (1.0 + self.lhs.abs())
    }
}

struct DenseEigen {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

fn dense_eigen(h: &Mat<f64>, diag: &[f64]) -> Result<DenseEigen> {
    let n = h.nrows();
    let shifted = Mat::from_fn(n, n, |i, j| h[(i, j)] + if i == j { diag[i] } else { 0.0 });
    let eig = shifted
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("dense eigensolver failed: {e:?}")))?;
    let s = eig.S();
    Ok(DenseEigen {
        values: (0..n).map(|k| s[k]).collect(),
        vectors: eig.U().to_owned(),
    })
}

/// Both sides of `tr([f(H+U) - f(H+V)](U-V)) =
/// sum_{k,l} (f(lambda_k) - f(mu_l))(lambda_k - mu_l) |<psi_k, xi_l>|^2`
/// for a dense symmetric `H` and diagonal `U`, `V`.
pub fn check_trace_identity(
    h: &Mat<f64>,
    u: &[f64],
    v: &[f64],
    f: &DistributionFunction,
) -> Result<TraceReport> {
    let n = h.nrows();
    if h.ncols() != n || u.len() != n || v.len() != n {
        return Err(Error::InvalidRequest(
            "dimension mismatch in trace identity check".into(),
        ));
    }
    let eu = dense_eigen(h, u)?;
    let ev = dense_eigen(h, v)?;
    let fu: Vec<f64> = eu.values.iter().map(|&l| f.eval(l)).collect();
    let fv: Vec<f64> = ev.values.iter().map(|&l| f.eval(l)).collect();

    // diagonal of f(H+U) - f(H+V) from the spectral decompositions
    let lhs: f64 = (0..n)
        .map(|i| {
            let a: f64 = (0..n).map(|k| eu.vectors[(i, k)].powi(2) * fu[k]).sum();
            let b: f64 = (0..n).map(|k| ev.vectors[(i, k)].powi(2) * fv[k]).sum();
            (a - b) * (u[i] - v[i])
        })
        .sum();

    let overlaps = eu.vectors.transpose() * &ev.vectors;
    let mut rhs = 0.0;
    for k in 0..n {
        for l in 0..n {
            let c = overlaps[(k, l)];
            rhs += (fu[k] - fv[l]) * (eu.values[k] - ev.values[l]) * c * c;
        }
    }
    Ok(TraceReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// A random symmetric matrix of dimension `n` (tridiagonal or full) with two
/// random diagonal perturbations, for the trace identity.
pub fn random_trace_instance(
    n: usize,
    full: bool,
    rng: &mut impl Rng,
) -> (Mat<f64>, Vec<f64>, Vec<f64>) {
    let mut h = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = rng.gen_range(-5.0..5.0);
        for j in i + 1..n {
            if full || j == i + 1 {
                let x = rng.gen_range(-2.0..2.0);
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
    }
    let u = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let v = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    (h, u, v)
}

/// `int (N_f(U) - N_f(V)) (U - V) dx`, nonpositive for a monotone
/// (decreasing) density operator.
pub fn check_monotonicity(
    device: &Device,
    u_pot: &NodalField,
    v_pot: &NodalField,
    f: &DistributionFunction,
    particles: f64,
    tail_tol: f64,
) -> Result<f64> {
    let grid = &device.grid;
    let mass = &device.coefficients.mass;
    let nu = density_operator(u_pot, f, particles, grid, mass, tail_tol)?.density;
    let nv = density_operator(v_pot, f, particles, grid, mass, tail_tol)?.density;
    let integrand: Vec<f64> = nu
        .iter()
        .zip(nv.iter())
        .zip(u_pot.iter().zip(v_pot.iter()))
        .map(|((a, b), (x, y))| (a - b) * (x - y))
        .collect();
    Ok(grid.integrate(&NodalField(integrand)))
}

/// Tolerance of the monotonicity contract.
pub fn monotonicity_tolerance(device: &Device, u_pot: &NodalField, v_pot: &NodalField) -> f64 {
    let d = device.grid.norm_l2(&u_pot.sub(v_pot));
    1e-8 * (1.0 + d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriReport {
    /// `||phi - phi_lift||_{W^{1,2}}`.
    pub lhs: f64,
    /// `(||D||_{W^{-1,2}} + gamma N q) / M`.
    pub rhs: f64,
    pub monotonicity_constant: f64,
    pub gamma: f64,
    pub doping_dual_norm: f64,
    pub pass: bool,
}

/// A priori bound on the electrostatic potential with
/// `M = ess inf eps / 2` and `gamma = sqrt 2`.
pub fn check_apriori(
    result: &ScfResult,
    device: &Device,
    config: &ScfConfig,
) -> Result<AprioriReport> {
    let grid = &device.grid;
    let lift = device.lift()?;
    let lhs = grid.norm_w12(&result.phi.sub(&lift));
    let m = 0.5 * device.coefficients.permittivity.min();
    let doping_dual_norm = grid.dual_norm_wm12_elements(&device.coefficients.doping);
    let rhs = (doping_dual_norm + GAMMA_EMBEDDING * config.particles * config.charge.abs()) / m;
    Ok(AprioriReport {
        lhs,
        rhs,
        monotonicity_constant: m,
        gamma: GAMMA_EMBEDDING,
        doping_dual_norm,
        pass: lhs <= rhs,
    })
}

/// A random member of `L^1_N`: positive nodal values scaled to integral `N`.
pub fn random_density(device: &Device, particles: f64, rng: &mut impl Rng) -> NodalField {
    let grid = &device.grid;
    let modes: Vec<(f64, f64)> = (1..=4)
        .map(|k| {
            (
                rng.gen_range(-1.0..1.0) / k as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let raw = NodalField::from_fn(grid, |x| {
        let s: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * ((k + 1) as f64 * std::f64::consts::PI * x + p).sin())
            .sum();
        2.5 + s
    });
    let raw = NodalField(raw.iter().map(|v| v * rng.gen_range(0.5..1.5)).collect());
    let total = grid.integrate(&raw);
    raw.map(|v| v * particles / total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub max_distance: f64,
    pub all_converged: bool,
    pub starts: usize,
}

/// Solve from `starts` random initial densities and report the largest
/// pairwise `L^1` distance between the solutions. Requires `xc = None`.
pub fn check_uniqueness(
    device: &Device,
    f: &DistributionFunction,
    xc: &XcModel,
    config: &ScfConfig,
    starts: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    if !xc.is_none() {
        return Err(Error::InvalidRequest(
            "uniqueness is only guaranteed without exchange-correlation".into(),
        ));
    }
    if starts == 0 {
        return Err(Error::InvalidRequest("need at least one start".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut solutions = Vec::with_capacity(starts);
    let mut all_converged = true;
    for _ in 0..starts {
        let u0 = random_density(device, config.particles, &mut rng);
        let r = solve_scf(device, f, xc, config, Some(&u0))?;
        all_converged &= r.converged;
        solutions.push(r.density);
    }
    let mut max_distance: f64 = 0.0;
    for i in 0..starts {
        for j in i + 1..starts {
            max_distance = max_distance.max(device.grid.norm_l1(&solutions[i].sub(&solutions[j])));
        }
    }
    Ok(UniquenessReport {
        max_distance,
        all_converged,
        starts,
    })
}

/// Weighted distances between `f_beta` and the zero-temperature ramp along
/// an ascending schedule.
pub fn check_distribution_limit(schedule: &[f64], a: f64) -> Result<Vec<f64>> {
    if let Some(w) = schedule.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidRequest(format!(
            "schedule must be ascending, found {} then {}",
            w[0], w[1]
        )));
    }
    let ramp = DistributionFunction::zero_temperature();
    schedule
        .iter()
        .map(|&b| weighted_sup_distance(&DistributionFunction::fermi(b)?, &ramp, a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Layer, LayerStack};

    fn well(n: usize) -> Device {
        Device::new(
            &LayerStack::single(Layer::uniform(1.0)).unwrap(),
            n,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn rho_formula() {
        assert_eq!(rho_v(0.0, 1.0), -1.0);
        assert_eq!(rho_v(1.0, 1.0), -3.0);
        assert_eq!(m_bar(0.2), 1.0);
        assert_eq!(m_bar(3.0), 3.0);
    }

    #[test]
    fn zero_potential_passes_bounds() {
        let d = well(200);
        let r = check_eigenvalue_bounds(&d, &NodalField::zeros(&d.grid), 10).unwrap();
        assert_eq!(r.rho_v, -1.0);
        assert!(r.pass);
        assert_eq!(r.status, CheckStatus::Pass);
    }

    #[test]
    fn trace_identity_commuting_case() {
        let n = 6;
        let h = Mat::from_fn(n, n, |i, j| if i == j { i as f64 } else { 0.0 });
        let u: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 1.0).collect();
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let f = DistributionFunction::fermi(1.0).unwrap();
        let r = check_trace_identity(&h, &u, &v, &f).unwrap();
        let direct: f64 = (0..n)
            .map(|k| {
                let (a, b) = (k as f64 + u[k], k as f64 + v[k]);
                (f.eval(a) - f.eval(b)) * (a - b)
            })
            .sum();
        assert!((r.rhs - direct).abs() < 1e-12);
        assert!(r.gap < 1e-12);

        let same = check_trace_identity(&h, &u, &u, &f).unwrap();
        assert!(same.lhs.abs() < 1e-14 && same.rhs.abs() < 1e-14);
    }

    #[test]
    fn monotonicity_trivial_cases() {
        let d = well(200);
        let f = DistributionFunction::zero_temperature();
        let v = NodalField::from_fn(&d.grid, |x| 10.0 * (x - 0.3).powi(2));
        assert_eq!(check_monotonicity(&d, &v, &v, &f, 1.0, 1e-12).unwrap(), 0.0);
        let shifted = v.map(|x| x + 2.0);
        let i = check_monotonicity(&d, &shifted, &v, &f, 1.0, 1e-12).unwrap();
        assert!(i.abs() < 1e-10, "{i}");
    }

    #[test]
    fn apriori_is_trivial_without_charge() {
        let d = well(100);
        let cfg = ScfConfig {
            charge: 0.0,
            ..ScfConfig::default()
        };
        let r = solve_scf(
            &d,
            &DistributionFunction::zero_temperature(),
            &XcModel::None,
            &cfg,
            None,
        )
        .unwrap();
        let rep = check_apriori(&r, &d, &cfg).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn uniqueness_single_start() {
        let d = well(60);
        let r = check_uniqueness(
            &d,
            &DistributionFunction::zero_temperature(),
            &XcModel::None,
            &ScfConfig::default(),
            1,
            7,
        )
        .unwrap();
        assert_eq!(r.max_distance, 0.0);
        assert!(check_uniqueness(
            &d,
            &DistributionFunction::zero_temperature(),
            &XcModel::x_alpha(1.0, 0.5).unwrap(),
            &ScfConfig::default(),
            2,
            7
        )
        .is_err());
    }

    #[test]
    fn distribution_limit_examples() {
        let d = check_distribution_limit(&[1.0], -1.0).unwrap();
        assert!(d[0] >= std::f64::consts::LN_2 - 1e-15);
        let big = [1024.0, 4096.0];
        let a = check_distribution_limit(&big, -1.0).unwrap();
        let b = check_distribution_limit(&big, -10.0).unwrap();
        assert_eq!(a, b);
        assert!(check_distribution_limit(&[2.0, 1.0], -1.0).is_err());
    }
}

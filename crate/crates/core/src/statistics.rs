//! Occupation statistics: the zero- and finite-temperature distribution
//! functions, the chemical potential fixing the particle number, spectral
//! truncation with a certified tail bound, and the particle density operator.

use serde::Serialize;

use crate::eigensolver::{lowest_eigenpairs, Spectrum};
use crate::error::{Error, Result};
use crate::grid::{ElementField, Grid, NodalField};
use crate::operators::{assemble_schrodinger, DiscreteOperator};

/// Spin degeneracy.
pub const SPIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Temperature {
    Zero,
    /// Inverse scaled temperature `beta > 0`.
    Finite(f64),
}

/// A distribution function `f` scaled by the transversal prefactor `scale`:
/// `scale * max(-s, 0)` at zero temperature,
/// `scale * ln(1 + exp(-beta s)) / beta` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionFunction {
    pub temperature: Temperature,
    pub scale: f64,
}

impl DistributionFunction {
    pub fn zero_temperature() -> Self {
        Self {
            temperature: Temperature::Zero,
            scale: 1.0,
        }
    }

    pub fn fermi(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || beta.is_nan() {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if beta.is_infinite() {
            return Ok(Self::zero_temperature());
        }
        Ok(Self {
            temperature: Temperature::Finite(beta),
            scale: 1.0,
        })
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(Self { scale, ..self })
    }

    pub fn beta(&self) -> Option<f64> {
        match self.temperature {
            Temperature::Zero => None,
            Temperature::Finite(b) => Some(b),
        }
    }

    /// Overflow-safe evaluation.
    pub fn eval(&self, s: f64) -> f64 {
        let raw = match self.temperature {
            Temperature::Zero => (-s).max(0.0),
            Temperature::Finite(beta) => {
                if s >= 0.0 {
                    (-beta * s).exp().ln_1p() / beta
                } else {
                    -s + (beta * s).exp().ln_1p() / beta
                }
            }
        };
        self.scale * raw
    }

    /// `-f'(s)`, the occupation slope with respect to the chemical potential.
    fn slope(&self, s: f64) -> f64 {
        let raw = match self.temperature {
            Temperature::Zero => {
                if s < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Temperature::Finite(beta) => {
                if s >= 0.0 {
                    let e = (-beta * s).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + (beta * s).exp())
                }
            }
        };
        self.scale * raw
    }
}

/// Upper bound on the spectrum beyond the retained levels: for each bin, at
/// most `count` eigenvalues lie at or above `floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TailEstimate {
    pub bins: Vec<(f64, usize)>,
}

impl TailEstimate {
    /// The retained list is the whole spectrum.
    pub fn complete() -> Self {
        Self { bins: Vec::new() }
    }

    /// Upper bound on `2 sum_{l > L} f(lambda_l - mu)`.
    pub fn occupation(&self, f: &DistributionFunction, mu: f64) -> f64 {
        self.bins
            .iter()
            .map(|&(floor, count)| SPIN * count as f64 * f.eval(floor - mu))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationSummary {
    /// Chemical potential.
    pub mu: f64,
    /// `2 f(lambda_l - mu)` per retained level.
    pub occupations: Vec<f64>,
    /// Number of retained levels.
    pub truncation: usize,
    /// Certified bound on the occupation of the discarded levels.
    pub tail_bound: f64,
}

fn check_levels(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::Domain("no eigenvalues supplied".into()));
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("eigenvalues must be finite".into()));
    }
    // levels degenerate to rounding may coincide
    if let Some(w) = eigenvalues.windows(2).find(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain(format!(
            "eigenvalues must be ascending, found {} followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Exact solution of `2 c sum_l (mu - lambda_l)_+ = N` over ascending levels.
fn zero_temperature_mu(eigenvalues: &[f64], n: f64, scale: f64) -> f64 {
    let target = n / (SPIN * scale);
    let mut partial = 0.0;
    for (k, &lam) in eigenvalues.iter().enumerate() {
        partial += lam;
        let mu = (target + partial) / (k + 1) as f64;
        match eigenvalues.get(k + 1) {
            Some(&next) if mu > next => continue,
            _ => return mu,
        }
    }
    unreachable!("the last level always terminates the scan")
}

fn finite_temperature_mu(f: &DistributionFunction, beta: f64, eigenvalues: &[f64], n: f64) -> f64 {
    let count = |mu: f64| -> f64 { eigenvalues.iter().map(|&l| SPIN * f.eval(l - mu)).sum() };
    let lam1 = eigenvalues[0];
    // f_beta >= ramp, so the single-level zero-temperature value is an upper bracket
    let mut hi = lam1 + n / (SPIN * f.scale);
    let mut step = 1.0 / beta;
    while count(hi) < n {
        hi += step;
        step *= 2.0;
    }
    let l = eigenvalues.len() as f64;
    let guess = (SPIN * f.scale * l / (beta * n)).ln().max(0.0) / beta;
    let mut lo = lam1 - guess - 1.0 / beta;
    let mut step = 1.0 / beta;
    while count(lo) > n {
        lo -= step;
        step *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // one Newton polish, kept only if it stays inside the final bracket
    let mid = 0.5 * (lo + hi);
    let g = count(mid) - n;
    let slope: f64 = eigenvalues.iter().map(|&l| SPIN * f.slope(l - mid)).sum();
    if slope > 0.0 {
        let cand = mid - g / slope;
        if cand >= lo && cand <= hi && (count(cand) - n).abs() <= g.abs() {
            return cand;
        }
    }
    mid
}

/// Chemical potential `mu` with `2 sum_l f(lambda_l - mu) = N` over the
/// retained levels; the occupation of the unretained levels is bounded by
/// `tail` and must not exceed `tail_tol`.
pub fn chemical_potential(
    f: &DistributionFunction,
    eigenvalues: &[f64],
    n: f64,
    tail_tol: f64,
    tail: &TailEstimate,
) -> Result<OccupationSummary> {
    check_levels(eigenvalues)?;
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "particle number must be >= 1, got {n}"
        )));
    }
    let mu = match f.temperature {
        Temperature::Zero => zero_temperature_mu(eigenvalues, n, f.scale),
        Temperature::Finite(beta) => finite_temperature_mu(f, beta, eigenvalues, n),
    };
    let tail_bound = tail.occupation(f, mu);
    if tail_bound > tail_tol {
        return Err(Error::Truncation(format!(
            "{} retained levels leave a tail occupation of up to {tail_bound:e} > {tail_tol:e}",
            eigenvalues.len()
        )));
    }
    let occupations = eigenvalues.iter().map(|&l| SPIN * f.eval(l - mu)).collect();
    Ok(OccupationSummary {
        mu,
        occupations,
        truncation: eigenvalues.len(),
        tail_bound,
    })
}

/// `u(x) = sum_l o_l |psi_l(x)|^2`.
pub fn particle_density(spectrum: &Spectrum, occ: &OccupationSummary) -> Result<NodalField> {
    if spectrum.eigenfunctions.len() != occ.occupations.len() {
        return Err(Error::Domain(format!(
            "{} eigenfunctions but {} occupations",
            spectrum.eigenfunctions.len(),
            occ.occupations.len()
        )));
    }
    let first = spectrum
        .eigenfunctions
        .first()
        .ok_or_else(|| Error::Domain("empty spectrum".into()))?;
    let mut u = vec![0.0; first.len()];
    for (psi, &o) in spectrum.eigenfunctions.iter().zip(&occ.occupations) {
        if o == 0.0 {
            continue;
        }
        for (ui, p) in u.iter_mut().zip(psi.iter()) {
            *ui += o * p * p;
        }
    }
    Ok(NodalField(u))
}

/// Smallest eigenvalue by bisection on the Sturm count.
fn lowest_eigenvalue(op: &DiscreteOperator) -> f64 {
    let t = op.reduced();
    let (mut lo, mut hi) = t.gershgorin();
    let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t.sturm_count(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Bins of width `1/beta` near the Fermi level, geometrically widening
/// further out.
const LINEAR_BINS: usize = 64;

/// Number of levels to retain and the certified bound for the rest.
pub fn choose_truncation(
    f: &DistributionFunction,
    op: &DiscreteOperator,
    n: f64,
    tail_tol: f64,
) -> Result<(usize, TailEstimate)> {
    if !(tail_tol > 0.0) {
        return Err(Error::Domain(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    let dim = op.dim();
    let lam1 = lowest_eigenvalue(op);
    let raw = lam1 + n / (SPIN * f.scale);
    // mu never exceeds the one-level zero-temperature value
    let mu_hat = raw + 1e-9 * raw.abs().max(1.0);
    let t = op.reduced();
    let base = t.sturm_count(mu_hat).max(1);
    match f.temperature {
        Temperature::Zero => {
            let tail = if base < dim {
                TailEstimate {
                    bins: vec![(mu_hat, dim - base)],
                }
            } else {
                TailEstimate::complete()
            };
            Ok((base, tail))
        }
        Temperature::Finite(beta) => {
            let (_, ghi) = t.gershgorin();
            let mut edges = vec![mu_hat];
            let mut counts = vec![base];
            let mut width = 1.0 / beta;
            let mut e = mu_hat;
            while *counts.last().unwrap() < dim {
                if edges.len() > LINEAR_BINS {
                    width *= 2.0;
                }
                e += width;
                let c = if e > ghi {
                    dim
                } else {
                    t.sturm_count(e).max(base)
                };
                edges.push(e);
                counts.push(c);
            }
            // suffix sums of bin bounds: tail[j] bounds everything above edges[j]
            let nb = edges.len() - 1;
            let mut tail = vec![0.0; nb + 1];
            for j in (0..nb).rev() {
                let in_bin = (counts[j + 1] - counts[j]) as f64;
                tail[j] = tail[j + 1] + SPIN * in_bin * f.eval(edges[j] - mu_hat);
            }
            let j = (0..=nb).find(|&j| tail[j] <= tail_tol).unwrap_or(nb);
            let l = counts[j];
            let bins = (j..nb)
                .filter(|&i| counts[i + 1] > counts[i])
                .map(|i| (edges[i], counts[i + 1] - counts[i]))
                .collect();
            Ok((l, TailEstimate { bins }))
        }
    }
}

/// Density, occupations and spectrum for a given effective potential.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityResult {
    pub density: NodalField,
    pub occupation: OccupationSummary,
    pub spectrum: Spectrum,
}

/// The particle density operator: assemble `H_V`, truncate, solve the
/// eigenproblem and occupy the levels at the chemical potential.
pub fn density_operator(
    potential: &NodalField,
    f: &DistributionFunction,
    n: f64,
    grid: &Grid,
    mass: &ElementField,
    tail_tol: f64,
) -> Result<DensityResult> {
    let op = assemble_schrodinger(grid, mass, potential)?;
    let (levels, tail) = choose_truncation(f, &op, n, tail_tol)?;
    let spectrum = lowest_eigenpairs(&op, levels)?;
    let occupation = chemical_potential(f, &spectrum.eigenvalues, n, tail_tol, &tail)?;
    let density = particle_density(&spectrum, &occupation)?;
    Ok(DensityResult {
        density,
        occupation,
        spectrum,
    })
}

/// `theta(x) = max(1, x)`.
pub fn theta(x: f64) -> f64 {
    x.max(1.0)
}

/// `sup_{x >= a} |f1(x) - f2(x)| theta(x)`, sampled on `[a, X]` with local
/// refinement around the best sample, plus an analytic bound beyond `X`.
pub fn weighted_sup_distance(
    f1: &DistributionFunction,
    f2: &DistributionFunction,
    a: f64,
) -> Result<f64> {
    if !(a <= -1.0) {
        return Err(Error::Domain(format!(
            "lower limit must satisfy a <= -1, got {a}"
        )));
    }
    if f1 == f2 {
        return Ok(0.0);
    }
    let weighted = |x: f64| (f1.eval(x) - f2.eval(x)).abs() * theta(x);
    // slowest decay rate among the two; the ramp vanishes for x > 0
    let beta_min = [f1, f2]
        .iter()
        .filter_map(|f| f.beta())
        .fold(f64::INFINITY, f64::min);
    let scale_max = f1.scale.max(f2.scale);
    let x_max = if beta_min.is_finite() {
        (80.0 / beta_min).max(2.0)
    } else {
        2.0
    };

    let mut samples: Vec<f64> = Vec::new();
    let uniform = 4000;
    for i in 0..=uniform {
        samples.push(a + (0.0 - a) * i as f64 / uniform as f64);
        samples.push(x_max * i as f64 / uniform as f64);
    }
    // logarithmic clustering around the origin
    let mut r = 1e-12_f64;
    while r < x_max.max(-a) {
        if r <= x_max {
            samples.push(r);
        }
        if -r >= a {
            samples.push(-r);
        }
        r *= 1.1;
    }
    samples.push(1.0);
    let (mut best_x, mut best) = (0.0, weighted(0.0));
    for &x in &samples {
        let v = weighted(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // golden-section refinement around the best sample
    let span = (x_max - a) / uniform as f64;
    let (mut lo, mut hi) = ((best_x - span).max(a), (best_x + span).min(x_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if weighted(x1) > weighted(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best = best.max(weighted(0.5 * (lo + hi)));

    // beyond x_max both functions are below scale * exp(-beta x) / beta,
    // and x exp(-beta x) is decreasing there
    let tail = if beta_min.is_finite() {
        scale_max * x_max * (-beta_min * x_max).exp() / beta_min
    } else {
        0.0
    };
    Ok(best.max(tail))
}

//! Linear finite-element assembly of the Ben-Daniel-Duke Schroedinger
//! operator and the Poisson operator with Dirichlet conditions eliminated.
//!
//! Both operators share the form `-(a u')' + V u` with an element-wise
//! constant coefficient `a` and a lumped (trapezoid) potential term. The
//! generalized problem `K psi = lambda W psi` with diagonal lumped mass `W`
//! is reduced to the standard symmetric problem for `W^{-1/2} K W^{-1/2}`.

use crate::error::{Error, Result};
use crate::grid::{ElementField, Grid, NodalField};
use crate::linalg::SymTridiag;

/// Stiffness matrix plus lumped mass weights on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    stiffness: SymTridiag,
    weights: Vec<f64>,
    /// `a_e / h_e` per element.
    element_coef: Vec<f64>,
    /// Potential at interior nodes.
    potential: Vec<f64>,
}

impl DiscreteOperator {
    fn assemble(grid: &Grid, coef: &[f64], potential: Option<&NodalField>) -> Self {
        let k = grid.n_interior();
        let h = grid.widths();
        let w_all = grid.node_weights();
        let element_coef: Vec<f64> = coef.iter().zip(h).map(|(a, h)| a / h).collect();
        let potential: Vec<f64> = match potential {
            Some(v) => v[1..=k].to_vec(),
            None => vec![0.0; k],
        };
        let weights = w_all[1..=k].to_vec();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k.saturating_sub(1)];
        for j in 0..k {
            diag[j] = element_coef[j] + element_coef[j + 1] + weights[j] * potential[j];
            if j + 1 < k {
                off[j] = -element_coef[j + 1];
            }
        }
        let stiffness = SymTridiag::new(diag, off).expect("grid has at least one interior node");
        Self {
            stiffness,
            weights,
            element_coef,
            potential,
        }
    }

    /// Number of interior degrees of freedom.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `W^{-1/2} K W^{-1/2}`; the potential enters the diagonal unscaled, so
    /// a constant shift of the potential shifts the diagonal exactly.
    pub fn reduced(&self) -> SymTridiag {
        let k = self.dim();
        let ec = &self.element_coef;
        let w = &self.weights;
        let diag: Vec<f64> = (0..k)
            .map(|j| (ec[j] + ec[j + 1]) / w[j] + self.potential[j])
            .collect();
        let off: Vec<f64> = (0..k.saturating_sub(1))
            .map(|j| -ec[j + 1] / (w[j] * w[j + 1]).sqrt())
            .collect();
        SymTridiag::new(diag, off).expect("shapes are consistent")
    }

    /// `K x` for interior values `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.stiffness.matvec(x)
    }

    /// `x^T K x` evaluated in difference form (sum of element energies plus
    /// the potential term), which avoids the cancellation of the matrix form.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let k = self.dim();
        assert_eq!(x.len(), k, "vector length must match operator dimension");
        let at = |i: isize| -> f64 {
            if i < 0 || i as usize >= k {
                0.0
            } else {
                x[i as usize]
            }
        };
        let kinetic: f64 = self
            .element_coef
            .iter()
            .enumerate()
            .map(|(e, c)| {
                let d = at(e as isize) - at(e as isize - 1);
                c * d * d
            })
            .sum();
        let pot: f64 = (0..k)
            .map(|j| self.weights[j] * self.potential[j] * x[j] * x[j])
            .sum();
        kinetic + pot
    }

    /// Lumped inner product `sum w_i a_i b_i`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }
}

fn check_positive(name: &str, field: &ElementField, grid: &Grid) -> Result<()> {
    if field.len() != grid.n_elements() {
        return Err(Error::Domain(format!(
            "{name} has {} values for {} elements",
            field.len(),
            grid.n_elements()
        )));
    }
    if let Some((e, v)) = field
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::Domain(format!(
            "{name} must be positive and finite, element {e} has {v}"
        )));
    }
    Ok(())
}

/// Discrete `-(1/m) d/dx` kinetic operator (scaled so that hbar^2/2 = 1)
/// plus the lumped potential term, Dirichlet conditions eliminated.
pub fn assemble_schrodinger(
    grid: &Grid,
    mass: &ElementField,
    potential: &NodalField,
) -> Result<DiscreteOperator> {
    check_positive("mass", mass, grid)?;
    if potential.len() != grid.n_nodes() {
        return Err(Error::Domain(
            "potential length must equal node count".into(),
        ));
    }
    if !potential.is_finite() {
        return Err(Error::Domain("potential must be finite".into()));
    }
    let inv_mass: Vec<f64> = mass.iter().map(|m| 1.0 / m).collect();
    Ok(DiscreteOperator::assemble(grid, &inv_mass, Some(potential)))
}

/// Stiffness of `-d/dx eps d/dx` with homogeneous Dirichlet conditions.
pub fn assemble_poisson(grid: &Grid, eps: &ElementField) -> Result<DiscreteOperator> {
    check_positive("permittivity", eps, grid)?;
    Ok(DiscreteOperator::assemble(grid, eps, None))
}

/// The eps-harmonic function with boundary values `phi0`, `phi1`:
/// `phi0 + (phi1 - phi0) * int_0^x 1/eps / int_0^1 1/eps`.
pub fn lift_boundary(grid: &Grid, eps: &ElementField, phi0: f64, phi1: f64) -> Result<NodalField> {
    check_positive("permittivity", eps, grid)?;
    if phi0 == phi1 {
        return Ok(NodalField::constant(grid, phi0));
    }
    let mut cumulative = Vec::with_capacity(grid.n_nodes());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for (h, e) in grid.widths().iter().zip(eps.iter()) {
        acc += h / e;
        cumulative.push(acc);
    }
    let total = acc;
    let mut vals: Vec<f64> = cumulative
        .iter()
        .map(|c| phi0 + (phi1 - phi0) * (c / total))
        .collect();
    let last = vals.len() - 1;
    vals[last] = phi1;
    Ok(NodalField(vals))
}

/// `phi = phi_lift + P^{-1}(D - q u)` with `D` element-wise constant and the
/// density `u` paired through lumped weights.
pub fn solve_poisson(
    grid: &Grid,
    eps: &ElementField,
    doping: &ElementField,
    u: &NodalField,
    q: f64,
    phi0: f64,
    phi1: f64,
) -> Result<NodalField> {
    let op = assemble_poisson(grid, eps)?;
    if doping.len() != grid.n_elements() {
        return Err(Error::Domain(
            "doping length must equal element count".into(),
        ));
    }
    if u.len() != grid.n_nodes() {
        return Err(Error::Domain("density length must equal node count".into()));
    }
    let lift = lift_boundary(grid, eps, phi0, phi1)?;
    let mut load = grid.element_load(doping);
    let w = op.weights();
    for (j, b) in load.iter_mut().enumerate() {
        *b -= q * w[j] * u[j + 1];
    }
    let mut phi = lift;
    if load.iter().any(|&b| b != 0.0) {
        let x = op
            .stiffness()
            .solve_spd(&load)
            .map_err(|e| Error::Internal(format!("Poisson solve failed: {e}")))?;
        for (j, v) in x.into_iter().enumerate() {
            phi.0[j + 1] += v;
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sample_layers, Layer, LayerStack};

    #[test]
    fn laplacian_stencil() {
        let g = Grid::uniform(8).unwrap();
        let h = 1.0 / 8.0;
        let op = assemble_schrodinger(&g, &ElementField::constant(&g, 1.0), &NodalField::zeros(&g))
            .unwrap();
        for &d in op.stiffness().diag() {
            assert!((d - 2.0 / h).abs() < 1e-12);
        }
        for &e in op.stiffness().off() {
            assert!((e + 1.0 / h).abs() < 1e-12);
        }
        for &w in op.weights() {
            assert!((w - h).abs() < 1e-15);
        }
        let p = assemble_poisson(&g, &ElementField::constant(&g, 1.0)).unwrap();
        assert_eq!(p.stiffness(), op.stiffness());
    }

    #[test]
    fn interface_row_for_two_masses() {
        let s = LayerStack::new(vec![
            Layer::uniform(0.5),
            Layer {
                mass: 2.0,
                ..Layer::uniform(0.5)
            },
        ])
        .unwrap();
        let g = build_grid(4, &s).unwrap();
        let c = sample_layers(&s, &g).unwrap();
        let op = assemble_schrodinger(&g, &c.mass, &NodalField::zeros(&g)).unwrap();
        let h = 0.25;
        // interface node x = 0.5 is interior dof 1
        let t = op.stiffness();
        assert!((t.off()[0] + 1.0 / (1.0 * h)).abs() < 1e-12);
        assert!((t.off()[1] + 1.0 / (2.0 * h)).abs() < 1e-12);
        assert!((t.diag()[1] - (1.0 / h + 1.0 / (2.0 * h))).abs() < 1e-12);
    }

    #[test]
    fn poisson_scales_linearly_in_eps() {
        let g = Grid::uniform(6).unwrap();
        let p1 = assemble_poisson(&g, &ElementField::constant(&g, 1.0)).unwrap();
        let p2 = assemble_poisson(&g, &ElementField::constant(&g, 2.0)).unwrap();
        for (a, b) in p1.stiffness().diag().iter().zip(p2.stiffness().diag()) {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in p1.stiffness().off().iter().zip(p2.stiffness().off()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn nonpositive_coefficients_rejected() {
        let g = Grid::uniform(4).unwrap();
        let bad = ElementField(vec![1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            assemble_schrodinger(&g, &bad, &NodalField::zeros(&g)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(assemble_poisson(&g, &bad), Err(Error::Domain(_))));
        assert!(matches!(
            lift_boundary(&g, &bad, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lift_examples() {
        let g = Grid::uniform(10).unwrap();
        let one = ElementField::constant(&g, 1.0);
        let lift = lift_boundary(&g, &one, 0.0, 1.0).unwrap();
        for (x, v) in g.nodes().iter().zip(lift.iter()) {
            assert!((x - v).abs() < 1e-15);
        }
        let c = lift_boundary(&g, &one, 0.7, 0.7).unwrap();
        assert!(c.iter().all(|&v| v == 0.7));

        let g = Grid::uniform(4).unwrap();
        let eps = ElementField(vec![1.0, 1.0, 2.0, 2.0]);
        let lift = lift_boundary(&g, &eps, 0.0, 1.0).unwrap();
        assert!((lift[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_constant_source_is_nodally_exact() {
        let g = Grid::uniform(16).unwrap();
        let c = 3.0;
        let phi = solve_poisson(
            &g,
            &ElementField::constant(&g, 1.0),
            &ElementField::constant(&g, c),
            &NodalField::zeros(&g),
            1.0,
            0.0,
            0.0,
        )
        .unwrap();
        for (x, v) in g.nodes().iter().zip(phi.iter()) {
            assert!((v - c * x * (1.0 - x) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn poisson_without_sources_returns_lift() {
        let g = Grid::uniform(9).unwrap();
        let eps = ElementField::from_fn(&g, |x| 1.0 + x);
        let phi = solve_poisson(
            &g,
            &eps,
            &ElementField::constant(&g, 0.0),
            &NodalField::zeros(&g),
            1.0,
            -0.5,
            2.0,
        )
        .unwrap();
        assert_eq!(phi, lift_boundary(&g, &eps, -0.5, 2.0).unwrap());
    }
}

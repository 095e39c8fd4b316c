//! Mesh on the unit interval, layer stacks, nodal/element field containers,
//! quadrature and the norms used throughout the solver.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;

/// Tolerance on the sum of layer thickness fractions.
pub const THICKNESS_SUM_TOL: f64 = 1e-12;

/// One material layer; coefficients are in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Fraction of the unit interval occupied by the layer.
    pub thickness: f64,
    /// Effective mass.
    pub mass: f64,
    /// Dielectric permittivity.
    pub permittivity: f64,
    /// Conduction band offset.
    pub band_offset: f64,
    /// Dopant charge density.
    pub doping: f64,
}

impl Layer {
    /// Layer with unit mass and permittivity, no offset and no doping.
    pub fn uniform(thickness: f64) -> Self {
        Self {
            thickness,
            mass: 1.0,
            permittivity: 1.0,
            band_offset: 0.0,
            doping: 0.0,
        }
    }
}

/// Ordered sequence of layers covering `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidLayerStack(
                "at least one layer is required".into(),
            ));
        }
        for (k, l) in layers.iter().enumerate() {
            if !(l.thickness > 0.0) || !l.thickness.is_finite() {
                return Err(Error::InvalidLayerStack(format!(
                    "layer {k}: thickness must be positive, got {}",
                    l.thickness
                )));
            }
            if !(l.mass > 0.0) || !l.mass.is_finite() {
                return Err(Error::InvalidLayerStack(format!(
                    "layer {k}: mass must be positive and finite, got {}",
                    l.mass
                )));
            }
            if !(l.permittivity > 0.0) || !l.permittivity.is_finite() {
                return Err(Error::InvalidLayerStack(format!(
                    "layer {k}: permittivity must be positive and finite, got {}",
                    l.permittivity
                )));
            }
            if !l.band_offset.is_finite() || !l.doping.is_finite() {
                return Err(Error::InvalidLayerStack(format!(
                    "layer {k}: band offset and doping must be finite"
                )));
            }
        }
        let total: f64 = layers.iter().map(|l| l.thickness).sum();
        if (total - 1.0).abs() > THICKNESS_SUM_TOL {
            return Err(Error::InvalidLayerStack(format!(
                "thickness fractions sum to {total}, expected 1"
            )));
        }
        Ok(Self { layers })
    }

    /// A single homogeneous layer.
    pub fn single(layer: Layer) -> Result<Self> {
        Self::new(vec![Layer {
            thickness: 1.0,
            ..layer
        }])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Interface positions, including the end points 0 and 1.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for l in &self.layers[..self.layers.len() - 1] {
            acc += l.thickness;
            out.push(acc);
        }
        out.push(1.0);
        out
    }
}

/// Partition `0 = x_0 < x_1 < ... < x_n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    widths: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidResolution(format!(
                "a grid needs at least 2 elements, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes[0] != 0.0 || nodes[nodes.len() - 1] != 1.0 {
            return Err(Error::InvalidResolution(
                "grid must start at 0 and end at 1".into(),
            ));
        }
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if widths.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidResolution(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { nodes, widths })
    }

    /// Uniform grid with `n` elements.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidResolution(format!(
                "need n >= 2 elements, got {n}"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        nodes[n] = 1.0;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn n_elements(&self) -> usize {
        self.widths.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Trapezoid (lumped mass) weight of every node.
    pub fn node_weights(&self) -> Vec<f64> {
        let n = self.n_elements();
        let mut w = vec![0.0; n + 1];
        for (e, &h) in self.widths.iter().enumerate() {
            w[e] += 0.5 * h;
            w[e + 1] += 0.5 * h;
        }
        w
    }

    fn check_nodal(&self, f: &NodalField) {
        assert_eq!(
            f.len(),
            self.n_nodes(),
            "nodal field length must equal node count"
        );
    }

    /// Composite trapezoid rule.
    pub fn integrate(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        self.widths
            .iter()
            .enumerate()
            .map(|(e, h)| 0.5 * h * (f[e] + f[e + 1]))
            .sum()
    }

    /// Midpoint rule for element-wise constant fields.
    pub fn integrate_elements(&self, f: &ElementField) -> f64 {
        assert_eq!(
            f.len(),
            self.n_elements(),
            "element field length must equal element count"
        );
        self.widths.iter().zip(f.iter()).map(|(h, v)| h * v).sum()
    }

    pub fn norm_l1(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        self.node_weights()
            .iter()
            .zip(f.iter())
            .map(|(w, v)| w * v.abs())
            .sum()
    }

    pub fn norm_l2(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        self.node_weights()
            .iter()
            .zip(f.iter())
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_linf(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        f.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `||f'||_{L^2}` with `f'` the element-wise difference quotient.
    pub fn seminorm_h1(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        self.widths
            .iter()
            .enumerate()
            .map(|(e, h)| {
                let d = f[e + 1] - f[e];
                d * d / h
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Full norm `sqrt(||f||^2 + ||f'||^2)`.
    pub fn norm_w12(&self, f: &NodalField) -> f64 {
        let l2 = self.norm_l2(f);
        let h1 = self.seminorm_h1(f);
        (l2 * l2 + h1 * h1).sqrt()
    }

    /// Dual norm of the functional `v -> sum_i load_i v(x_i)` acting on
    /// interior nodes, realized through the Riesz map of `-d^2/dx^2 + 1`
    /// with homogeneous Dirichlet conditions.
    fn dual_norm_of_load(&self, load: &[f64]) -> f64 {
        if load.iter().all(|&b| b == 0.0) {
            return 0.0;
        }
        let weights = self.node_weights();
        let k = self.n_interior();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k.saturating_sub(1)];
        for i in 0..k {
            let (hl, hr) = (self.widths[i], self.widths[i + 1]);
            diag[i] = 1.0 / hl + 1.0 / hr + weights[i + 1];
            if i + 1 < k {
                off[i] = -1.0 / hr;
            }
        }
        // the operator is positive definite, so construction and solve cannot fail
        let riesz = SymTridiag::new(diag, off).expect("interior dimension is at least 1");
        let w = riesz
            .solve_spd(load)
            .expect("Riesz operator is positive definite");
        let pairing: f64 = load.iter().zip(&w).map(|(a, b)| a * b).sum();
        pairing.max(0.0).sqrt()
    }

    /// `W^{-1,2}` norm of a density given by nodal values (lumped pairing).
    pub fn dual_norm_wm12(&self, f: &NodalField) -> f64 {
        self.check_nodal(f);
        let w = self.node_weights();
        let load: Vec<f64> = (1..self.n_nodes() - 1).map(|i| w[i] * f[i]).collect();
        self.dual_norm_of_load(&load)
    }

    /// `W^{-1,2}` norm of an element-wise constant density (exact pairing
    /// with the hat functions).
    pub fn dual_norm_wm12_elements(&self, f: &ElementField) -> f64 {
        assert_eq!(
            f.len(),
            self.n_elements(),
            "element field length must equal element count"
        );
        self.dual_norm_of_load(&self.element_load(f))
    }

    /// `int f phi_i dx` for interior hat functions `phi_i` and element-wise
    /// constant `f`.
    pub fn element_load(&self, f: &ElementField) -> Vec<f64> {
        (1..self.n_nodes() - 1)
            .map(|i| 0.5 * (self.widths[i - 1] * f[i - 1] + self.widths[i] * f[i]))
            .collect()
    }

    /// Nodal representative of an element field whose lumped pairing with
    /// hat functions matches the element-wise integral: the width-weighted
    /// average of the adjacent elements.
    pub fn element_to_nodal(&self, f: &ElementField) -> NodalField {
        assert_eq!(
            f.len(),
            self.n_elements(),
            "element field length must equal element count"
        );
        let n = self.n_elements();
        let mut out = vec![0.0; n + 1];
        out[0] = f[0];
        out[n] = f[n - 1];
        for i in 1..n {
            let (hl, hr) = (self.widths[i - 1], self.widths[i]);
            out[i] = if f[i - 1] == f[i] {
                f[i]
            } else {
                (hl * f[i - 1] + hr * f[i]) / (hl + hr)
            };
        }
        NodalField(out)
    }

    /// Piecewise-linear interpolation of a field on `from` onto this grid.
    pub fn interpolate_from(&self, from: &Grid, f: &NodalField) -> NodalField {
        from.check_nodal(f);
        let xs = from.nodes();
        let mut e = 0;
        let vals = self
            .nodes
            .iter()
            .map(|&x| {
                while e + 1 < from.n_elements() && xs[e + 1] < x {
                    e += 1;
                }
                let t = ((x - xs[e]) / (xs[e + 1] - xs[e])).clamp(0.0, 1.0);
                (1.0 - t) * f[e] + t * f[e + 1]
            })
            .collect();
        NodalField(vals)
    }
}

/// Grid with `n` elements whose nodes contain every layer interface; each
/// layer is filled uniformly with a share of elements proportional to its
/// thickness (at least one).
pub fn build_grid(n: usize, stack: &LayerStack) -> Result<Grid> {
    if n < 2 {
        return Err(Error::InvalidResolution(format!(
            "need n >= 2 elements, got {n}"
        )));
    }
    let layers = stack.layers();
    if n < layers.len() {
        return Err(Error::InvalidResolution(format!(
            "{n} elements cannot resolve {} layers",
            layers.len()
        )));
    }
    let counts = allocate_elements(n, layers);
    let interfaces = stack.interfaces();
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    for (k, &count) in counts.iter().enumerate() {
        let (a, b) = (interfaces[k], interfaces[k + 1]);
        for j in 1..count {
            nodes.push(a + (b - a) * j as f64 / count as f64);
        }
        nodes.push(b);
    }
    Grid::new(nodes)
}

/// Largest-remainder apportionment with a floor of one element per layer.
fn allocate_elements(n: usize, layers: &[Layer]) -> Vec<usize> {
    let ideal: Vec<f64> = layers.iter().map(|l| l.thickness * n as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|&v| (v.floor() as usize).max(1)).collect();
    let mut total: usize = counts.iter().sum();
    while total > n {
        // take from the layer most above its ideal share
        let k = (0..counts.len())
            .filter(|&k| counts[k] > 1)
            .max_by(|&a, &b| {
                (counts[a] as f64 - ideal[a]).total_cmp(&(counts[b] as f64 - ideal[b]))
            })
            .expect("n >= layer count leaves a layer with spare elements");
        counts[k] -= 1;
        total -= 1;
    }
    while total < n {
        let k = (0..counts.len())
            .max_by(|&a, &b| {
                (ideal[a] - counts[a] as f64)
                    .total_cmp(&(ideal[b] - counts[b] as f64))
                    .then(b.cmp(&a))
            })
            .expect("stack is nonempty");
        counts[k] += 1;
        total += 1;
    }
    counts
}

/// Element-wise coefficient profiles sampled from a layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub mass: ElementField,
    pub permittivity: ElementField,
    pub band_offset: ElementField,
    pub doping: ElementField,
}

/// Assign each element the coefficients of the layer containing it.
pub fn sample_layers(stack: &LayerStack, grid: &Grid) -> Result<Coefficients> {
    let interfaces = stack.interfaces();
    let layers = stack.layers();
    let nodes = grid.nodes();
    let tol = 1e-13;
    let mut k = 0;
    let mut idx = Vec::with_capacity(grid.n_elements());
    for e in 0..grid.n_elements() {
        let (xl, xr) = (nodes[e], nodes[e + 1]);
        let mid = 0.5 * (xl + xr);
        while k + 1 < layers.len() && mid > interfaces[k + 1] {
            k += 1;
        }
        if xl < interfaces[k] - tol || xr > interfaces[k + 1] + tol {
            return Err(Error::Internal(format!(
                "element [{xl}, {xr}] straddles a layer interface"
            )));
        }
        idx.push(k);
    }
    let pick = |g: fn(&Layer) -> f64| ElementField(idx.iter().map(|&k| g(&layers[k])).collect());
    Ok(Coefficients {
        mass: pick(|l| l.mass),
        permittivity: pick(|l| l.permittivity),
        band_offset: pick(|l| l.band_offset),
        doping: pick(|l| l.doping),
    })
}

/// Values attached to grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalField(pub Vec<f64>);

impl NodalField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![0.0; grid.n_nodes()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self(vec![c; grid.n_nodes()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self(grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    /// Node-wise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &NodalField, b: f64) -> Self {
        assert_eq!(self.len(), other.len(), "field lengths must agree");
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn sub(&self, other: &NodalField) -> Self {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &NodalField) -> Self {
        self.combine(1.0, other, 1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for NodalField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Values attached to elements (piecewise constants).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementField(pub Vec<f64>);

impl ElementField {
    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self(vec![c; grid.n_elements()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self(
            grid.nodes()
                .windows(2)
                .map(|w| f(0.5 * (w[0] + w[1])))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Deref for ElementField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

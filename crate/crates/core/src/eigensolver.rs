//! Lowest eigenpairs of the discrete Schroedinger operator by Sturm-sequence
//! bisection followed by inverse iteration and a Rayleigh-quotient refinement.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::NodalField;
use crate::operators::DiscreteOperator;

/// Ascending eigenvalues with their L^2-normalized eigenfunctions (nodal,
/// zero at both boundary nodes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenfunctions: Vec<NodalField>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

const MAX_BISECTION_STEPS: usize = 200;
const INVERSE_ITERATION_STEPS: usize = 8;

/// Number of eigenvalues strictly below `energy`.
pub fn count_below(op: &DiscreteOperator, energy: f64) -> usize {
    op.reduced().sturm_count(energy)
}

/// Index-`l` eigenvalue (0-based) of the reduced matrix by bisection.
fn bisect_eigenvalue(t: &crate::linalg::SymTridiag, l: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if t.sturm_count(mid) > l {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// The `count` lowest eigenpairs of `K psi = lambda W psi`.
pub fn lowest_eigenpairs(op: &DiscreteOperator, count: usize) -> Result<Spectrum> {
    let dim = op.dim();
    if count == 0 || count > dim {
        return Err(Error::InvalidRequest(format!(
            "requested {count} eigenpairs from an operator of dimension {dim}"
        )));
    }
    let t = op.reduced();
    let (glo, ghi) = t.gershgorin();
    let scale = glo.abs().max(ghi.abs()).max(1.0);
    let (lo0, hi0) = (glo - 1e-12 * scale, ghi + 1e-12 * scale);

    let mut values = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut lower = lo0;
    for l in 0..count {
        let lambda = bisect_eigenvalue(&t, l, lower, hi0);
        lower = lambda.min(hi0) - 4.0 * f64::EPSILON * scale;

        let lu = t.shifted_lu(lambda);
        let mut y: Vec<f64> = (0..dim)
            .map(|i| {
                1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895 * (l as f64 + 1.0)).sin()
            })
            .collect();
        normalize(&mut y);
        for _ in 0..INVERSE_ITERATION_STEPS {
            let prev = y.clone();
            lu.solve(&mut y);
            for v in &vectors {
                let c: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi -= c * vi;
                }
            }
            if normalize(&mut y) == 0.0 || y.iter().any(|x| !x.is_finite()) {
                return Err(Error::NumericalFailure(format!(
                    "inverse iteration collapsed for eigenpair {l}"
                )));
            }
            let dot: f64 = prev.iter().zip(&y).map(|(a, b)| a * b).sum();
            if (1.0 - dot.abs()) < 1e-15 {
                break;
            }
        }
        // final pass against earlier vectors
        for v in &vectors {
            let c: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi -= c * vi;
            }
        }
        normalize(&mut y);
        let imax = (0..dim)
            .max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
            .unwrap_or(0);
        if y[imax] < 0.0 {
            y.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(y);
        values.push(lambda);
    }

    let w = op.weights();
    let mut eigenfunctions = Vec::with_capacity(count);
    for (l, y) in vectors.iter().enumerate() {
        let psi: Vec<f64> = y.iter().zip(w).map(|(yi, wi)| yi / wi.sqrt()).collect();
        let rq = op.quadratic_form(&psi) / op.inner(&psi, &psi);
        if rq.is_finite() {
            values[l] = rq;
        }
        let mut nodal = Vec::with_capacity(dim + 2);
        nodal.push(0.0);
        nodal.extend_from_slice(&psi);
        nodal.push(0.0);
        eigenfunctions.push(NodalField(nodal));
    }
    // refinement may swap levels that coincide to rounding
    if values.windows(2).any(|w| w[1] < w[0]) {
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        values = order.iter().map(|&i| values[i]).collect();
        let mut slots: Vec<Option<NodalField>> = eigenfunctions.into_iter().map(Some).collect();
        eigenfunctions = order.iter().map(|&i| slots[i].take().unwrap()).collect();
    }
    Ok(Spectrum {
        eigenvalues: values,
        eigenfunctions,
    })
}

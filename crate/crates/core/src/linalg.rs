//! Symmetric tridiagonal matrices: products, direct solves and Sturm counts.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and one off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidRequest("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::Internal(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                diag.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match matrix dimension");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Interval `[lo, hi]` containing the whole spectrum (Gershgorin discs).
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `shift`, from the signs of the
    /// LDL^T pivots of `T - shift`.
    pub fn sturm_count(&self, shift: f64) -> usize {
        let n = self.dim();
        let (lo, hi) = self.gershgorin();
        let guard = f64::MIN_POSITIVE.sqrt() * (hi.abs().max(lo.abs()).max(1.0));
        let mut count = 0;
        let mut q = self.diag[0] - shift;
        for i in 0..n {
            if i > 0 {
                let e = self.off[i - 1];
                q = (self.diag[i] - shift) - e * e / q;
            }
            if q == 0.0 {
                // an exact zero pivot counts as nonnegative; perturb upward
                q = guard;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Thomas algorithm. Valid for diagonally dominant or positive definite
    /// matrices (no pivoting).
    pub fn solve_spd(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Internal("right-hand side length mismatch".into()));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Internal("singular tridiagonal system".into()));
        }
        if n > 1 {
            c[0] = self.off[0] / denom;
        }
        d[0] = rhs[0] / denom;
        for i in 1..n {
            let e = self.off[i - 1];
            denom = self.diag[i] - e * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Internal("singular tridiagonal system".into()));
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (rhs[i] - e * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// LU factorization of `T - shift` with partial pivoting.
    pub fn shifted_lu(&self, shift: f64) -> ShiftedLu {
        ShiftedLu::factor(self, shift)
    }
}

/// Partial-pivoting LU of a shifted tridiagonal matrix, the factorization
/// used by inverse iteration. Zero pivots are replaced by a tiny multiple of
/// the matrix scale so nearly singular shifts still yield a direction.
#[derive(Debug, Clone)]
pub struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiag, shift: f64) -> Self {
        let n = t.dim();
        let mut dl: Vec<f64> = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du: Vec<f64> = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let (lo, hi) = t.gershgorin();
        let tiny = f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= self.dl[i] * rhs[i];
        }
        rhs[n - 1] /= self.d[n - 1];
        if n > 1 {
            rhs[n - 2] = (rhs[n - 2] - self.du[n - 2] * rhs[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - self.du[i] * rhs[i + 1] - self.du2[i] * rhs[i + 2]) / self.d[i];
        }
    }
}

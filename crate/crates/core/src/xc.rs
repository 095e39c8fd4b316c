//! Local exchange-correlation models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::NodalField;

/// Densities this far below zero are treated as rounding noise.
const NEGATIVE_DENSITY_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum XcModel {
    #[default]
    None,
    /// `V_xc(u) = -c u^alpha`.
    XAlpha { c: f64, alpha: f64 },
}

impl XcModel {
    pub fn x_alpha(c: f64, alpha: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("xc coupling must be >= 0, got {c}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "xc exponent must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self::XAlpha { c, alpha })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, XcModel::None)
    }
}

pub fn evaluate_vxc(model: &XcModel, u: &NodalField) -> Result<NodalField> {
    if let Some((i, &v)) = u
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -NEGATIVE_DENSITY_CLIP || v.is_nan())
    {
        return Err(Error::Domain(format!("negative density {v} at node {i}")));
    }
    Ok(match *model {
        XcModel::None => u.map(|_| 0.0),
        XcModel::XAlpha { c, alpha } => u.map(|v| -c * v.max(0.0).powf(alpha)),
    })
}

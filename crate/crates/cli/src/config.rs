//! Device configuration files.
//!
//! ```toml
//! [device.layer.1]
//! thickness = 1.0
//! mass = 1.0
//! permittivity = 1.0
//!
//! [particles]
//! n = 1.0
//! charge = 1.0
//!
//! [statistics]
//! kind = "fermi"
//! beta = 4.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ks1d::grid::{Layer, LayerStack};
use ks1d::scf::{Device, ScfConfig};
use ks1d::statistics::DistributionFunction;
use ks1d::xc::XcModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub units: Units,
    pub device: DeviceSection,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub particles: Particles,
    #[serde(default)]
    pub statistics: Statistics,
    #[serde(default)]
    pub xc: Xc,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub scf: Scf,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "system", rename_all = "lowercase")]
pub enum Units {
    /// `hbar^2 / 2 = 1` on the unit interval.
    #[default]
    Scaled,
    /// Energies, contact potentials and temperatures in physical units on a
    /// device of the given length.
    Physical {
        hbar: f64,
        m_perp: f64,
        eps0: f64,
        #[serde(default = "one")]
        length: f64,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// Layers keyed by their position, `1` at `x = 0`.
    pub layer: BTreeMap<String, LayerSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub thickness: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub permittivity: f64,
    #[serde(default)]
    pub band_offset: f64,
    #[serde(default)]
    pub doping: f64,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    #[serde(default)]
    pub phi0: f64,
    #[serde(default)]
    pub phi1: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Particles {
    #[serde(default = "one")]
    pub n: f64,
    #[serde(default = "one")]
    pub charge: f64,
}

impl Default for Particles {
    fn default() -> Self {
        Self {
            n: 1.0,
            charge: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsKind {
    #[default]
    Zero,
    Fermi,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Statistics {
    #[serde(default)]
    pub kind: StatisticsKind,
    pub beta: Option<f64>,
    pub kt: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum XcKind {
    #[default]
    None,
    Xalpha,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Xc {
    #[serde(default)]
    pub kind: XcKind,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_elements")]
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: default_elements(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scf {
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol_l1: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default)]
    pub adaptive_damping: bool,
}

impl Default for Scf {
    fn default() -> Self {
        Self {
            damping: default_damping(),
            tol_l1: default_tol(),
            max_iter: default_max_iter(),
            tail_tol: default_tail_tol(),
            adaptive_damping: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: None,
            profile: default_profile(),
            summary: default_summary(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_elements() -> usize {
    400
}
fn default_damping() -> f64 {
    0.3
}
fn default_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    200
}
fn default_tail_tol() -> f64 {
    1e-10
}
fn default_profile() -> String {
    "profile.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

/// Conversion from physical input to the scaled units of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitScale {
    /// Energy unit `hbar^2 / (2 L^2)`.
    pub energy: f64,
    pub length: f64,
    /// Factor applied to relative permittivities.
    pub permittivity: f64,
    /// Default prefactor of the distribution function.
    pub distribution_scale: f64,
}

impl Units {
    pub fn scale(&self) -> Result<UnitScale, CliError> {
        match *self {
            Units::Scaled => Ok(UnitScale {
                energy: 1.0,
                length: 1.0,
                permittivity: 1.0,
                distribution_scale: 1.0,
            }),
            Units::Physical {
                hbar,
                m_perp,
                eps0,
                length,
            } => {
                for (name, v) in [
                    ("hbar", hbar),
                    ("m_perp", m_perp),
                    ("eps0", eps0),
                    ("length", length),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(CliError::Config(format!(
                            "units.{name} must be positive, got {v}"
                        )));
                    }
                }
                let energy = hbar * hbar / (2.0 * length * length);
                Ok(UnitScale {
                    energy,
                    length,
                    permittivity: eps0 * energy / length,
                    distribution_scale: m_perp / (2.0 * std::f64::consts::PI * hbar * hbar)
                        * energy,
                })
            }
        }
    }
}

/// A validated run description in scaled units.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub units: UnitScale,
    pub stack: LayerStack,
    pub elements: usize,
    pub phi0: f64,
    pub phi1: f64,
    pub distribution: DistributionFunction,
    pub xc: XcModel,
    pub scf: ScfConfig,
}

impl RunConfig {
    pub fn device(&self) -> Result<Device, CliError> {
        Device::new(&self.stack, self.elements, self.phi0, self.phi1).map_err(CliError::from_setup)
    }

    pub fn with_elements(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.elements = n;
        c.raw.grid.n = n;
        c
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    validate(raw)
}

pub fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
    let units = raw.units.scale()?;
    let e = units.energy;

    let mut keyed = Vec::with_capacity(raw.device.layer.len());
    for (key, layer) in &raw.device.layer {
        let k: usize = key.parse().map_err(|_| {
            CliError::Config(format!(
                "device.layer.{key}: layer keys must be positive integers"
            ))
        })?;
        keyed.push((k, layer));
    }
    keyed.sort_by_key(|(k, _)| *k);
    for (i, (k, _)) in keyed.iter().enumerate() {
        if *k != i + 1 {
            return Err(CliError::Config(format!(
                "device.layer keys must be numbered 1..{} without gaps, found {k}",
                keyed.len()
            )));
        }
    }
    let layers: Vec<Layer> = keyed
        .iter()
        .map(|(_, l)| Layer {
            thickness: l.thickness,
            mass: l.mass,
            permittivity: l.permittivity * units.permittivity,
            band_offset: l.band_offset / e,
            doping: l.doping * units.length,
        })
        .collect();
    let stack =
        LayerStack::new(layers).map_err(|err| CliError::Config(format!("device: {err}")))?;

    if raw.grid.n < 2 {
        return Err(CliError::Config(format!(
            "grid.n must be at least 2, got {}",
            raw.grid.n
        )));
    }
    if raw.grid.n < stack.len() {
        return Err(CliError::Config(format!(
            "grid.n = {} cannot resolve {} layers",
            raw.grid.n,
            stack.len()
        )));
    }

    let st = &raw.statistics;
    let scale = st.scale.unwrap_or(units.distribution_scale);
    let distribution = match st.kind {
        StatisticsKind::Zero => {
            if st.beta.is_some() || st.kt.is_some() {
                return Err(CliError::Config(
                    "statistics.beta and statistics.kt require kind = \"fermi\"".into(),
                ));
            }
            DistributionFunction::zero_temperature()
        }
        StatisticsKind::Fermi => {
            let beta = match (st.beta, st.kt) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config(
                        "statistics.beta and statistics.kt conflict: give only one".into(),
                    ))
                }
                (Some(b), None) => b * e,
                (None, Some(kt)) => {
                    if !(kt > 0.0) {
                        return Err(CliError::Config(format!(
                            "statistics.kt must be positive, got {kt}"
                        )));
                    }
                    e / kt
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "statistics.kind = \"fermi\" needs statistics.beta or statistics.kt".into(),
                    ))
                }
            };
            DistributionFunction::fermi(beta)
                .map_err(|err| CliError::Config(format!("statistics: {err}")))?
        }
    }
    .with_scale(scale)
    .map_err(|err| CliError::Config(format!("statistics.scale: {err}")))?;

    let xc = match raw.xc.kind {
        XcKind::None => {
            if raw.xc.c.is_some() || raw.xc.alpha.is_some() {
                return Err(CliError::Config(
                    "xc.c and xc.alpha require kind = \"xalpha\"".into(),
                ));
            }
            XcModel::None
        }
        XcKind::Xalpha => {
            let (Some(c), Some(alpha)) = (raw.xc.c, raw.xc.alpha) else {
                return Err(CliError::Config(
                    "xc.kind = \"xalpha\" needs xc.c and xc.alpha".into(),
                ));
            };
            XcModel::x_alpha(c / e, alpha).map_err(|err| CliError::Config(format!("xc: {err}")))?
        }
    };

    let scf = ScfConfig {
        particles: raw.particles.n,
        charge: raw.particles.charge,
        damping: raw.scf.damping,
        tol_l1: raw.scf.tol_l1,
        max_iter: raw.scf.max_iter,
        tail_tol: raw.scf.tail_tol,
        adaptive_damping: raw.scf.adaptive_damping,
    };
    scf.validate()
        .map_err(|err| CliError::Config(format!("particles/scf: {err}")))?;
    for (name, v) in [
        ("boundary.phi0", raw.boundary.phi0),
        ("boundary.phi1", raw.boundary.phi1),
    ] {
        if !v.is_finite() {
            return Err(CliError::Config(format!("{name} must be finite")));
        }
    }

    Ok(RunConfig {
        units,
        stack,
        elements: raw.grid.n,
        phi0: raw.boundary.phi0 / e,
        phi1: raw.boundary.phi1 / e,
        distribution,
        xc,
        scf,
        raw,
    })
}

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ks1d::scf::ScfResult;
use rayon::prelude::*;

use crate::config::{validate, RunConfig, StatisticsKind};
use crate::output::{num, write_text};
use crate::solve::{solve, summarize};
use crate::{CliError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Kt,
    Beta,
    Particles,
    Charge,
    XcC,
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "kt" => Ok(SweepParam::Kt),
            "beta" => Ok(SweepParam::Beta),
            "n" | "particles" => Ok(SweepParam::Particles),
            "q" | "charge" => Ok(SweepParam::Charge),
            "xc.c" => Ok(SweepParam::XcC),
            _ => Err(CliError::Config(format!(
                "unknown sweep parameter {s:?}; expected one of kt, beta, n, q, xc.c"
            ))),
        }
    }
}

impl SweepParam {
    fn is_temperature(self) -> bool {
        matches!(self, SweepParam::Kt | SweepParam::Beta)
    }

    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig, CliError> {
        let mut raw = base.raw.clone();
        match self {
            SweepParam::Kt => {
                raw.statistics.kind = StatisticsKind::Fermi;
                raw.statistics.beta = None;
                raw.statistics.kt = Some(value);
            }
            SweepParam::Beta => {
                raw.statistics.kind = StatisticsKind::Fermi;
                raw.statistics.kt = None;
                raw.statistics.beta = Some(value);
            }
            SweepParam::Particles => raw.particles.n = value,
            SweepParam::Charge => raw.particles.charge = value,
            SweepParam::XcC => raw.xc.c = Some(value),
        }
        validate(raw)
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone)]
pub struct PointReport {
    pub value: f64,
    pub status: String,
    pub mu: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub u_linf: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub density_distance: Option<f64>,
    pub potential_distance: Option<f64>,
}

fn point_dir(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join(format!("point_{index:03}"))
}

fn run_point(
    base: &RunConfig,
    param: SweepParam,
    index: usize,
    value: f64,
    dir: &Path,
    reference: Option<&ScfResult>,
) -> PointReport {
    let mut report = PointReport {
        value,
        status: String::new(),
        mu: None,
        eigenvalues: Vec::new(),
        u_linf: None,
        iterations: None,
        converged: false,
        density_distance: None,
        potential_distance: None,
    };
    let mut run = || -> Result<(), CliError> {
        let cfg = param.apply(base, value)?;
        let (device, r) = solve(&cfg)?;
        let summary = summarize(&cfg, &device, &r)?;
        let out = point_dir(dir, index);
        write_text(
            &out.join(&cfg.raw.output.profile),
            &crate::output::profile_table(&device.grid, &r.density, &r.phi, &r.effective_potential),
        )?;
        crate::output::write_json(&out.join(&cfg.raw.output.summary), &summary)?;
        report.mu = Some(r.occupation.mu);
        report.eigenvalues = r.spectrum.eigenvalues.iter().take(5).copied().collect();
        report.u_linf = Some(summary.u_linf);
        report.iterations = Some(r.iterations);
        report.converged = r.converged;
        if let Some(z) = reference {
            let g = &device.grid;
            report.density_distance = Some(g.norm_l1(&r.density.sub(&z.density)));
            report.potential_distance = Some(g.norm_linf(&r.phi.sub(&z.phi)));
        }
        Ok(())
    };
    let status = match run() {
        Ok(()) => None,
        Err(e) => Some(format!("error: {e}").replace([',', '\n'], ";")),
    };
    report.status = status.unwrap_or_else(|| {
        if report.converged {
            "ok"
        } else {
            "not_converged"
        }
        .into()
    });
    report
}

pub fn aggregate_table(param: &str, points: &[PointReport], temperature: bool) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut s = format!("index,{param},status,mu,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,u_linf,iterations,converged");
    if temperature {
        s.push_str(",density_distance,potential_distance");
    }
    s.push('\n');
    for (i, p) in points.iter().enumerate() {
        let lambdas: Vec<String> = (0..5).map(|k| opt(p.eigenvalues.get(k).copied())).collect();
        let _ = write!(
            s,
            "{i},{},{},{},{},{},{},{}",
            num(p.value),
            p.status,
            opt(p.mu),
            lambdas.join(","),
            opt(p.u_linf),
            p.iterations.map(|n| n.to_string()).unwrap_or_default(),
            p.converged
        );
        if temperature {
            let _ = write!(
                s,
                ",{},{}",
                opt(p.density_distance),
                opt(p.potential_distance)
            );
        }
        s.push('\n');
    }
    s
}

/// Independent solves at every value, artifacts per point under
/// `point_NNN/` and an aggregate `sweep.csv`.
pub fn run_sweep(
    base: &RunConfig,
    param_name: &str,
    values: &[f64],
    dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<(Outcome, Vec<PointReport>), CliError> {
    let param: SweepParam = param_name.parse()?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if param == SweepParam::XcC && base.xc.is_none() {
        return Err(CliError::Config(
            "sweeping xc.c needs xc.kind = \"xalpha\"".into(),
        ));
    }
    let reference = if param.is_temperature() {
        let mut raw = base.raw.clone();
        raw.statistics.kind = StatisticsKind::Zero;
        raw.statistics.beta = None;
        raw.statistics.kt = None;
        let cold = validate(raw)?;
        Some(solve(&cold)?.1)
    } else {
        None
    };
    let points: Vec<PointReport> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| run_point(base, param, i, v, dir, reference.as_ref()))
            .collect()
    });
    write_text(
        &dir.join("sweep.csv"),
        &aggregate_table(param_name, &points, param.is_temperature()),
    )?;
    let outcome = if points.iter().all(|p| p.status == "ok") {
        Outcome::Success
    } else {
        Outcome::NotConverged
    };
    Ok((outcome, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn parameters_parse() {
        assert_eq!("kt".parse::<SweepParam>().unwrap(), SweepParam::Kt);
        assert_eq!("n".parse::<SweepParam>().unwrap(), SweepParam::Particles);
        assert_eq!("xc.c".parse::<SweepParam>().unwrap(), SweepParam::XcC);
        assert!("mass".parse::<SweepParam>().is_err());
    }

    #[test]
    fn temperature_values_replace_the_statistics() {
        let base = parse(
            "[device.layer.1]\nthickness = 1.0\n[statistics]\nkind = \"fermi\"\nbeta = 3.0\n",
        )
        .unwrap();
        let c = SweepParam::Kt.apply(&base, 0.5).unwrap();
        assert_eq!(c.distribution.beta(), Some(2.0));
        let c = SweepParam::Beta.apply(&base, 7.0).unwrap();
        assert_eq!(c.distribution.beta(), Some(7.0));
        assert!(SweepParam::Particles.apply(&base, 0.2).is_err());
    }

    #[test]
    fn aggregate_has_fixed_columns() {
        let p = PointReport {
            value: 1.0,
            status: "ok".into(),
            mu: Some(2.0),
            eigenvalues: vec![1.0, 4.0],
            u_linf: Some(3.0),
            iterations: Some(5),
            converged: true,
            density_distance: None,
            potential_distance: None,
        };
        let t = aggregate_table("q", &[p], false);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1], "0,1.0,ok,2.0,1.0,4.0,,,,3.0,5,true");
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    }
}

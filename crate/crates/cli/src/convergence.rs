use std::fmt::Write as _;
use std::path::Path;

use ks1d::grid::NodalField;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, write_json, write_text};
use crate::solve::solve;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub n: usize,
    pub lambda_1: f64,
    /// `|lambda_1 - reference|`.
    pub lambda_1_error: f64,
    pub lambda_1_order: Option<f64>,
    /// `||u_n - u_{prev}||_{L^1}` with the coarser density interpolated.
    pub density_diff: Option<f64>,
    pub density_order: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    /// Exact for a bare single-layer well, otherwise a Richardson estimate
    /// from the two finest grids assuming second order.
    pub reference: f64,
    pub reference_kind: &'static str,
    pub rows: Vec<Row>,
}

fn order(coarse: f64, fine: f64, ratio: f64) -> Option<f64> {
    if coarse > 0.0 && fine > 0.0 && ratio > 1.0 {
        Some((coarse / fine).ln() / ratio.ln())
    } else {
        None
    }
}

/// `pi^2 / m` when the device is a single field-free layer without coupling.
fn exact_lambda(cfg: &RunConfig) -> Option<f64> {
    let layers = cfg.stack.layers();
    let bare = layers.len() == 1
        && layers[0].band_offset == 0.0
        && cfg.scf.charge == 0.0
        && cfg.xc.is_none();
    bare.then(|| std::f64::consts::PI.powi(2) / layers[0].mass)
}

pub fn run_convergence(
    cfg: &RunConfig,
    ns: &[usize],
    pool: &rayon::ThreadPool,
) -> Result<Study, CliError> {
    if ns.len() < 2 {
        return Err(CliError::Config(
            "convergence study needs at least two grid sizes".into(),
        ));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(
            "grid sizes must be strictly ascending".into(),
        ));
    }
    let solved: Vec<_> = pool.install(|| {
        ns.par_iter()
            .map(|&n| solve(&cfg.with_elements(n)))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let lambdas: Vec<f64> = solved
        .iter()
        .map(|(_, r)| r.spectrum.eigenvalues[0])
        .collect();
    let (reference, reference_kind) = match exact_lambda(cfg) {
        Some(l) => (l, "exact"),
        None => {
            let k = ns.len() - 1;
            let r = ns[k] as f64 / ns[k - 1] as f64;
            (
                lambdas[k] + (lambdas[k] - lambdas[k - 1]) / (r * r - 1.0),
                "richardson",
            )
        }
    };

    let mut rows: Vec<Row> = Vec::with_capacity(ns.len());
    let mut prev_density: Option<(usize, NodalField)> = None;
    for (k, ((device, r), &n)) in solved.iter().zip(ns).enumerate() {
        let err = (lambdas[k] - reference).abs();
        let density_diff = prev_density.as_ref().map(|(j, u)| {
            let coarse = &solved[*j].0.grid;
            let lifted = device.grid.interpolate_from(coarse, u);
            device.grid.norm_l1(&r.density.sub(&lifted))
        });
        let (lambda_1_order, density_order) = match rows.last() {
            Some(p) => {
                let ratio = n as f64 / p.n as f64;
                let dorder = match (p.density_diff, density_diff) {
                    (Some(a), Some(b)) => order(a, b, ratio),
                    _ => None,
                };
                // the Richardson reference is built from the finest grid
                let last_richardson = reference_kind == "richardson" && k == ns.len() - 1;
                let lorder = if last_richardson {
                    None
                } else {
                    order(p.lambda_1_error, err, ratio)
                };
                (lorder, dorder)
            }
            None => (None, None),
        };
        rows.push(Row {
            n,
            lambda_1: lambdas[k],
            lambda_1_error: err,
            lambda_1_order,
            density_diff,
            density_order,
            converged: r.converged,
        });
        prev_density = Some((k, r.density.clone()));
    }
    Ok(Study {
        reference,
        reference_kind,
        rows,
    })
}

pub fn table(study: &Study) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut s = String::from(
        "n,lambda_1,lambda_1_error,lambda_1_order,density_diff,density_order,converged\n",
    );
    for r in &study.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            num(r.lambda_1),
            num(r.lambda_1_error),
            opt(r.lambda_1_order),
            opt(r.density_diff),
            opt(r.density_order),
            r.converged
        );
    }
    s
}

pub fn write_study(study: &Study, dir: &Path) -> Result<(), CliError> {
    write_text(&dir.join("convergence.csv"), &table(study))?;
    write_json(&dir.join("convergence.json"), study)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn order_from_halving() {
        assert!((order(4.0, 1.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(order(0.0, 0.0, 2.0), None);
    }

    #[test]
    fn exact_reference_only_for_bare_wells() {
        let bare =
            parse("[device.layer.1]\nthickness = 1.0\nmass = 2.0\n[particles]\ncharge = 0.0\n")
                .unwrap();
        assert_eq!(
            exact_lambda(&bare),
            Some(std::f64::consts::PI.powi(2) / 2.0)
        );
        let coupled = parse("[device.layer.1]\nthickness = 1.0\n").unwrap();
        assert_eq!(exact_lambda(&coupled), None);
    }

    #[test]
    fn rejects_bad_lists() {
        let cfg = parse("[device.layer.1]\nthickness = 1.0\n").unwrap();
        let pool = crate::thread_pool(Some(1)).unwrap();
        assert!(run_convergence(&cfg, &[100], &pool).is_err());
        assert!(run_convergence(&cfg, &[200, 100], &pool).is_err());
    }
}

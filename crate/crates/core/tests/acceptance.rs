//! Acceptance suite. Every test prints one PASS/FAIL line per criterion;
//! run with `cargo test -p ks1d --test acceptance -- --nocapture
//! --test-threads=1` to see them in order.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use ks1d::analysis::{
    check_apriori, check_distribution_limit, check_eigenvalue_bounds, check_monotonicity,
    check_trace_identity, check_uniqueness, monotonicity_tolerance, random_trace_instance,
    AprioriReport, CheckStatus,
};
use ks1d::eigensolver::lowest_eigenpairs;
use ks1d::grid::{ElementField, Grid, Layer, LayerStack, NodalField};
use ks1d::operators::assemble_schrodinger;
use ks1d::scf::{kohn_sham_map, solve_scf, temperature_continuation, Device, ScfConfig, ScfResult};
use ks1d::statistics::{density_operator, DistributionFunction};
use ks1d::xc::XcModel;
use rand::Rng;

fn distributions() -> [DistributionFunction; 2] {
    [
        DistributionFunction::zero_temperature(),
        DistributionFunction::fermi(1.0).unwrap(),
    ]
}

#[test]
fn criterion_01_bare_well_spectrum() {
    let start = Instant::now();
    let g = Grid::uniform(2000).unwrap();
    let op =
        assemble_schrodinger(&g, &ElementField::constant(&g, 1.0), &NodalField::zeros(&g)).unwrap();
    let s = lowest_eigenpairs(&op, 10).unwrap();
    let elapsed = start.elapsed();
    let errors: Vec<f64> = s
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(l, lam)| {
            let exact = ((l + 1) as f64 * PI).powi(2);
            (lam - exact).abs() / exact
        })
        .collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let failing: Vec<usize> = errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 1e-5)
        .map(|(l, _)| l + 1)
        .collect();
    let pass = failing.is_empty() && elapsed < Duration::from_secs(1);
    report(
        1,
        "bare-well spectrum",
        pass,
        &format!(
            "worst relative error {worst:.3e} (tol 1e-5), levels over tolerance {failing:?}, {elapsed:?}"
        ),
    );
    for (l, e) in errors.iter().enumerate() {
        println!("    l = {:>2}: relative error {e:.4e}", l + 1);
    }
    assert!(pass);
}

#[test]
fn criterion_02_conservation() {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let device = random_device(&mut rng, 300);
        let amp = rng.gen_range(0.0..50.0);
        let v = random_potential(&device, &mut rng, amp);
        let n = rng.gen_range(1.0..6.0);
        for f in distributions() {
            let out = density_operator(&v, &f, n, &device.grid, &device.coefficients.mass, 1e-10)
                .unwrap();
            worst = worst.max((device.grid.integrate(&out.density) - n).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-8 && elapsed < Duration::from_secs(30);
    report(
        2,
        "conservation",
        pass,
        &format!("max |int u - N| = {worst:.3e} (tol 1e-8), {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_gauge_invariance() {
    let mut rng = rng(3);
    let mut worst_u: f64 = 0.0;
    let mut worst_mu: f64 = 0.0;
    for _ in 0..5 {
        let device = random_device(&mut rng, 400);
        let v = random_potential(&device, &mut rng, 20.0);
        let mass = &device.coefficients.mass;
        for f in distributions() {
            let base = density_operator(&v, &f, 2.0, &device.grid, mass, 1e-13).unwrap();
            for c in [-5.0, 1.0, 10.0] {
                let shifted = v.map(|x| x + c);
                let out = density_operator(&shifted, &f, 2.0, &device.grid, mass, 1e-13).unwrap();
                worst_u = worst_u.max(device.grid.norm_l1(&out.density.sub(&base.density)));
                worst_mu = worst_mu.max((out.occupation.mu - base.occupation.mu - c).abs());
            }
        }
    }
    let pass = worst_u <= 1e-10 && worst_mu <= 1e-10;
    report(
        3,
        "gauge invariance",
        pass,
        &format!("max L1 density change {worst_u:.3e}, max |dmu - c| {worst_mu:.3e} (tol 1e-10)"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_eigenvalue_sandwich() {
    let mut rng = rng(4);
    let (mut fails, mut inconclusive) = (0, 0);
    let mut worst = f64::INFINITY;
    for trial in 0..100 {
        let device = if trial % 2 == 0 {
            benchmark_well(400)
        } else {
            random_device(&mut rng, 400)
        };
        let raw = random_potential(&device, &mut rng, 1.0);
        let v = with_l1_norm(&device, &raw, rng.gen_range(0.0..5.0));
        let r = check_eigenvalue_bounds(&device, &v, 20).unwrap();
        worst = worst.min(r.worst_margin);
        match r.status {
            CheckStatus::Fail => fails += 1,
            CheckStatus::Inconclusive => inconclusive += 1,
            CheckStatus::Pass => {}
        }
    }
    let pass = fails == 0;
    report(
        4,
        "eigenvalue sandwich",
        pass,
        &format!("100 potentials, l <= 20: {fails} failures, {inconclusive} inconclusive, worst margin {worst:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_trace_identity() {
    let start = Instant::now();
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.gen_range(2..=50);
        let (h, u, v) = random_trace_instance(n, trial % 2 == 1, &mut rng);
        for f in distributions() {
            let r = check_trace_identity(&h, &u, &v, &f).unwrap();
            worst = worst.max(r.relative_gap());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(10);
    report(
        5,
        "trace identity",
        pass,
        &format!("max relative gap {worst:.3e} (tol 1e-10), {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_monotonicity() {
    let mut rng = rng(6);
    let device = benchmark_well(300);
    let mut violations = 0;
    let mut worst_ratio = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (au, av) = (rng.gen_range(0.5..30.0), rng.gen_range(0.5..30.0));
        let u = random_potential(&device, &mut rng, au);
        let v = random_potential(&device, &mut rng, av);
        let tol = monotonicity_tolerance(&device, &u, &v);
        for f in distributions() {
            let i = check_monotonicity(&device, &u, &v, &f, 2.0, 1e-12).unwrap();
            worst_ratio = worst_ratio.max(i / tol);
            if i > tol {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    report(
        6,
        "density operator monotonicity",
        pass,
        &format!("200 evaluations, {violations} violations, max I/tol = {worst_ratio:.3e}"),
    );
    assert!(pass);
}

fn benchmark_solutions() -> Vec<(DistributionFunction, ScfResult)> {
    let device = benchmark_well(400);
    let cfg = benchmark_config();
    distributions()
        .into_iter()
        .map(|f| {
            (
                f,
                solve_scf(&device, &f, &XcModel::None, &cfg, None).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_07_scf_fixed_point() {
    let device = benchmark_well(400);
    let cfg = benchmark_config();
    let mut pass = true;
    let mut details = Vec::new();
    for (f, r) in benchmark_solutions() {
        let again = kohn_sham_map(&r.density, &device, &f, &XcModel::None, &cfg).unwrap();
        let res = device.grid.norm_l1(&again.sub(&r.density));
        let ok = r.converged && r.iterations <= 200 && res <= 2e-9;
        pass &= ok;
        details.push(format!(
            "{:?}: converged={} in {} iterations, re-evaluated residual {res:.3e}",
            f.temperature, r.converged, r.iterations
        ));
    }
    report(7, "SCF fixed point", pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_uniqueness() {
    let device = benchmark_well(400);
    let cfg = benchmark_config();
    let mut pass = true;
    let mut details = Vec::new();
    for f in distributions() {
        let r = check_uniqueness(&device, &f, &XcModel::None, &cfg, 3, 8).unwrap();
        pass &= r.all_converged && r.max_distance <= 1e-7;
        details.push(format!(
            "{:?}: max pairwise L1 {:.3e}",
            f.temperature, r.max_distance
        ));
    }
    report(8, "uniqueness", pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_09_apriori_bound() {
    let mut corpus: Vec<(String, Device, ScfConfig, ScfResult)> = Vec::new();
    let cfg = benchmark_config();
    for (f, r) in benchmark_solutions() {
        corpus.push((
            format!("benchmark {:?}", f.temperature),
            benchmark_well(400),
            cfg,
            r,
        ));
    }
    // doped heterostructure with contacts, with and without exchange-correlation
    let stack = LayerStack::new(vec![
        Layer {
            band_offset: 5.0,
            doping: 3.0,
            permittivity: 1.5,
            ..Layer::uniform(0.3)
        },
        Layer {
            mass: 0.7,
            ..Layer::uniform(0.4)
        },
        Layer {
            band_offset: 5.0,
            doping: 3.0,
            permittivity: 1.5,
            ..Layer::uniform(0.3)
        },
    ])
    .unwrap();
    let hetero = Device::new(&stack, 400, 0.2, -0.1).unwrap();
    let hcfg = ScfConfig {
        particles: 2.0,
        charge: 2.0,
        ..cfg
    };
    let mut rhs_by_f: Vec<f64> = Vec::new();
    for f in distributions() {
        for xc in [XcModel::None, XcModel::x_alpha(1.0, 1.0 / 3.0).unwrap()] {
            let r = solve_scf(&hetero, &f, &xc, &hcfg, None).unwrap();
            corpus.push((
                format!("heterostructure {:?} {:?}", f.temperature, xc),
                hetero.clone(),
                hcfg,
                r,
            ));
        }
    }
    let weak = ScfConfig {
        charge: 0.01,
        ..cfg
    };
    let r = solve_scf(
        &benchmark_well(400),
        &DistributionFunction::zero_temperature(),
        &XcModel::None,
        &weak,
        None,
    )
    .unwrap();
    corpus.push(("benchmark q=0.01".into(), benchmark_well(400), weak, r));

    let mut pass = true;
    let mut reports: Vec<(String, AprioriReport)> = Vec::new();
    for (name, device, cfg, r) in &corpus {
        assert!(r.converged, "{name} did not converge");
        let rep = check_apriori(r, device, cfg).unwrap();
        pass &= rep.pass;
        if name.starts_with("heterostructure") {
            rhs_by_f.push(rep.rhs);
        }
        reports.push((name.clone(), rep));
    }
    let rhs_identical = rhs_by_f.windows(2).all(|w| w[0] == w[1]);
    pass &= rhs_identical;
    let worst = reports
        .iter()
        .map(|(_, r)| r.lhs / r.rhs)
        .fold(0.0, f64::max);
    report(
        9,
        "a priori bound",
        pass,
        &format!(
            "{} converged results, max lhs/rhs = {worst:.3e}, rhs identical across distributions: {rhs_identical}",
            reports.len()
        ),
    );
    for (name, r) in &reports {
        println!("    {name}: lhs {:.6e} <= rhs {:.6e}", r.lhs, r.rhs);
    }
    assert!(pass);
}

#[test]
fn criterion_10_zero_temperature_limit() {
    let start = Instant::now();
    let device = benchmark_well(400);
    let cfg = benchmark_config();
    let mut schedule: Vec<f64> = (0..=20).map(|j| 2f64.powi(j)).collect();
    let finite = schedule.clone();
    schedule.push(f64::INFINITY);
    let cont = temperature_continuation(&device, &schedule, 1.0, &XcModel::None, &cfg).unwrap();
    let all_converged = cont.stages.iter().all(|s| s.result.converged);
    let distances: Vec<f64> = cont.stages[..finite.len()]
        .iter()
        .map(|s| s.density_distance)
        .collect();

    // Distances below the resolution of two solves at tol_l1 cannot be ordered.
    let resolution = 10.0 * cfg.tol_l1;
    let tail_start = distances.len() / 2;
    let tail_decreasing = (tail_start.max(1)..distances.len())
        .all(|j| distances[j] <= distances[j - 1] || distances[j] <= resolution);
    let last = *distances.last().unwrap();

    let weighted = check_distribution_limit(&finite, -1.0).unwrap();
    let weighted_decreasing = weighted.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    let pass = all_converged
        && tail_decreasing
        && last <= 1e-4
        && weighted_decreasing
        && elapsed < Duration::from_secs(120);
    report(
        10,
        "zero-temperature limit",
        pass,
        &format!(
            "||u_b - u_inf||_L1 at b=2^20: {last:.3e} (tol 1e-4), tail nonincreasing above {resolution:.0e}: {tail_decreasing}, weighted distance strictly decreasing: {weighted_decreasing}, {elapsed:?}"
        ),
    );
    for (s, w) in cont.stages.iter().zip(&weighted) {
        println!(
            "    beta = {:>9}: L1 {:.3e}, Linf(phi) {:.3e}, weighted f distance {w:.3e}",
            s.beta, s.density_distance, s.potential_distance
        );
    }
    assert!(pass);
}

#[test]
fn criterion_11_distribution_monotone_in_beta() {
    let mut violations = 0;
    let samples = 10_000;
    for beta in [1.0, 2.0, 4.0, 8.0] {
        let f = DistributionFunction::fermi(beta).unwrap();
        let f2 = DistributionFunction::fermi(2.0 * beta).unwrap();
        for i in 0..samples {
            let x = -3.0 + 11.0 * i as f64 / (samples - 1) as f64;
            if f2.eval(x) >= f.eval(x) || f2.eval(x).is_nan() {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    report(
        11,
        "f_beta strictly decreasing in beta",
        pass,
        &format!("4 x {samples} samples on [-3, 8], {violations} violations"),
    );
    assert!(pass);
}

#[test]
fn criterion_12_discretization_order() {
    let ns = [250, 500, 1000, 2000];
    let mut pass = true;
    let mut details = Vec::new();
    for mass in [1.0, 2.0, 0.5] {
        let stack = LayerStack::single(Layer {
            mass,
            ..Layer::uniform(1.0)
        })
        .unwrap();
        let exact = PI * PI / mass;
        let errors: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let d = Device::new(&stack, n, 0.0, 0.0).unwrap();
                let op = assemble_schrodinger(
                    &d.grid,
                    &d.coefficients.mass,
                    &NodalField::zeros(&d.grid),
                )
                .unwrap();
                (lowest_eigenpairs(&op, 1).unwrap().eigenvalues[0] - exact).abs()
            })
            .collect();
        let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        pass &= orders.iter().all(|&p| p >= 1.9);
        details.push(format!("m={mass}: orders {orders:.3?}"));
    }
    report(12, "discretization order", pass, &details.join("; "));
    assert!(pass);
}

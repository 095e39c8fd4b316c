#![allow(dead_code)]

use ks1d::grid::{Layer, LayerStack, NodalField};
use ks1d::scf::{Device, ScfConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Quantum well: eps = 1, m = 1, no offset, no doping, grounded contacts.
pub fn benchmark_well(n: usize) -> Device {
    Device::new(
        &LayerStack::single(Layer::uniform(1.0)).unwrap(),
        n,
        0.0,
        0.0,
    )
    .unwrap()
}

pub fn benchmark_config() -> ScfConfig {
    ScfConfig {
        particles: 1.0,
        charge: 1.0,
        damping: 0.3,
        tol_l1: 1e-9,
        max_iter: 200,
        tail_tol: 1e-10,
        adaptive_damping: false,
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random stack of 1-4 layers with positive coefficients.
pub fn random_stack(rng: &mut impl Rng) -> LayerStack {
    let k = rng.gen_range(1..=4);
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut fracs: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = fracs[..k - 1].iter().sum();
    fracs[k - 1] = 1.0 - head;
    let layers = fracs
        .into_iter()
        .map(|t| Layer {
            thickness: t,
            mass: rng.gen_range(0.3..2.0),
            permittivity: rng.gen_range(0.5..3.0),
            band_offset: rng.gen_range(0.0..20.0),
            doping: rng.gen_range(-2.0..2.0),
        })
        .collect();
    LayerStack::new(layers).unwrap()
}

pub fn random_device(rng: &mut impl Rng, n: usize) -> Device {
    let stack = random_stack(rng);
    Device::new(
        &stack,
        n,
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
    .unwrap()
}

/// Smooth random potential: a few sine modes plus a random step.
pub fn random_potential(device: &Device, rng: &mut impl Rng, amplitude: f64) -> NodalField {
    let modes: Vec<(f64, f64)> = (1..=5)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let step_at = rng.gen_range(0.1..0.9);
    let step = rng.gen_range(-1.0..1.0);
    NodalField::from_fn(&device.grid, |x| {
        let s: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * ((k + 1) as f64 * std::f64::consts::PI * x + p).sin())
            .sum();
        amplitude * (s + if x > step_at { step } else { 0.0 })
    })
}

/// Rescale a potential to have the given L^1 norm.
pub fn with_l1_norm(device: &Device, v: &NodalField, target: f64) -> NodalField {
    let norm = device.grid.norm_l1(v);
    v.map(|x| x * target / norm)
}

pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#![allow(dead_code)]

use nondiv_lod::assembly::OperatorMatrix;
use nondiv_lod::fespace::VectorFESpace;
use nondiv_lod::lod::Lod;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random conforming P1 vector field.
pub fn random_field(space: &VectorFESpace, rng: &mut StdRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    space.project(&mut v);
    v
}

/// `v - Σ_F q_F(v) ρ_F`, an element of the kernel of all coarse fluxes.
pub fn w_sample(lod: &Lod, rng: &mut StdRng) -> Vec<f64> {
    let mut v = random_field(&lod.space, rng);
    let q = lod.qoi.apply(&v);
    for (f, b) in lod.bubbles.iter().enumerate() {
        for &(d, val) in &b.coefficients {
            v[d] -= q[f] * val;
        }
    }
    v
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn energy(a: &OperatorMatrix, v: &[f64]) -> f64 {
    a.energy(v)
}

pub fn relative_energy(a: &OperatorMatrix, x: &[f64], reference: &[f64]) -> f64 {
    a.energy(&sub(x, reference)) / a.energy(reference)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn log2_ratio(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

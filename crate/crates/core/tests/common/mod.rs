#![allow(dead_code)]

use std::sync::Arc;

use nlkg_core::field::{Field, FieldPair, State};
use nlkg_core::grid::RadialGrid;
use nlkg_core::groundstate::{solve_sp, GroundState};
use nlkg_core::params::Params;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(dim: usize, rmax: f64, npts: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(dim, rmax, npts).unwrap())
}

pub fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

pub fn gaussian(g: &Arc<RadialGrid>, c: Complex64, a: f64) -> Field {
    Field::from_fn(g, |r| c * (-a * r * r).exp())
}

/// Sum of three complex Gaussians with random amplitudes and widths.
pub fn random_profile(g: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Field {
    let terms: Vec<(Complex64, f64)> = (0..3)
        .map(|_| {
            (
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(0.3..2.0),
            )
        })
        .collect();
    Field::from_fn(g, |r| {
        terms.iter().map(|(c, a)| c * (-a * r * r).exp()).sum()
    })
}

pub fn random_state(g: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> State {
    State::new(
        random_profile(g, rng),
        random_profile(g, rng),
        random_profile(g, rng),
        random_profile(g, rng),
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn resonant_2d() -> Params {
    Params::new(1.0, 2.0, 0.5, 2).unwrap()
}

pub fn resonant_3d() -> Params {
    Params::new(1.0, 2.0, 0.4, 3).unwrap()
}

pub fn ground_state(p: &Params, rmax: f64, npts: usize) -> GroundState {
    solve_sp(p, &grid(p.dim, rmax, npts), 1e-10, 2000).unwrap()
}

/// Scalar ground state of -Δw + μw = w² by the plain Petviashvili iteration,
/// on the same discretization as the coupled solver.
pub fn scalar_ground_state(g: &Arc<RadialGrid>, mu: f64) -> Vec<f64> {
    let n = g.npts();
    let lap = g.laplacian_matrix();
    let lu = lap.leading_block(n - 1, -1.0, mu).lu();
    let w_q = g.weights();
    let dot = |a: &[f64], b: &[f64]| -> f64 { (0..n).map(|j| w_q[j] * a[j] * b[j]).sum() };
    let mut w: Vec<f64> = g
        .nodes()
        .iter()
        .map(|r| 1.5 * mu * (-mu * r * r / 4.0).exp())
        .collect();
    w[n - 1] = 0.0;
    for _ in 0..500 {
        let mut lw = vec![0.0; n];
        lap.apply(&w, &mut lw);
        let aw: Vec<f64> = (0..n).map(|j| -lw[j] + mu * w[j]).collect();
        let nl: Vec<f64> = w.iter().map(|x| x * x).collect();
        let s = dot(&aw, &w) / dot(&nl, &w);
        let mut next = nl[..n - 1].to_vec();
        lu.solve_in_place(&mut next);
        let mut change = 0.0;
        let mut size = 0.0;
        for j in 0..n - 1 {
            let v = s * s * next[j];
            change += w_q[j] * (v - w[j]).powi(2);
            size += w_q[j] * v * v;
            w[j] = v;
        }
        if (change / size).sqrt() < 1e-13 {
            return w;
        }
    }
    panic!("scalar oracle did not converge");
}

pub fn real_field(g: &Arc<RadialGrid>, v: &[f64]) -> Field {
    Field::from_values(g, v.iter().map(|&x| Complex64::new(x, 0.0)).collect()).unwrap()
}

pub fn pair(a: Field, b: Field) -> FieldPair {
    FieldPair::new(a, b).unwrap()
}

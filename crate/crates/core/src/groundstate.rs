//! Radial ground states of the stationary problem
//!   -Δφ1 + μ1 φ1 = 2 φ1 φ2,   -Δφ2 + μ2 φ2 = φ1²
//! by a relaxed Petviashvili iteration.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::banded::BandedLu;
use crate::error::{Error, Result};
use crate::field::{Field, FieldPair, State};
use crate::functionals::PositionSums;
use crate::grid::RadialGrid;
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the Petviashvili image in each update. The plain map (1.0)
    /// has a neutral period-two mode for this coupling; 0.5 removes it.
    pub relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 2000,
            relaxation: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub phi1: Field,
    pub phi2: Field,
    pub params: Params,
    pub residual: f64,
    pub iterations: usize,
}

/// Shifted Helmholtz operators -Δ + μ on the unknown nodes 0..M-2.
struct Helmholtz {
    lu1: BandedLu,
    lu2: BandedLu,
}

impl Helmholtz {
    fn new(grid: &RadialGrid, p: &Params) -> Self {
        let m = grid.npts() - 1;
        let lap = grid.laplacian_matrix();
        Helmholtz {
            lu1: lap.leading_block(m, -1.0, p.mu1()).lu(),
            lu2: lap.leading_block(m, -1.0, p.mu2()).lu(),
        }
    }
}

/// Iterate state on real vectors of length M (last entry zero).
struct Iterate<'a> {
    grid: &'a RadialGrid,
    p: &'a Params,
}

impl Iterate<'_> {
    fn apply_op(&self, f: &[f64], mu: f64) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.grid.laplacian_matrix().apply(f, &mut out);
        for (o, x) in out.iter_mut().zip(f) {
            *o = -*o + mu * x;
        }
        *out.last_mut().unwrap() = 0.0;
        out
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Residual norm relative to μ1|φ1| + μ2|φ2|.
    fn residual(&self, f1: &[f64], f2: &[f64]) -> f64 {
        let (mu1, mu2) = (self.p.mu1(), self.p.mu2());
        let mut r1 = self.apply_op(f1, mu1);
        let mut r2 = self.apply_op(f2, mu2);
        for j in 0..r1.len() - 1 {
            r1[j] -= 2.0 * f1[j] * f2[j];
            r2[j] -= f1[j] * f1[j];
        }
        let scale = mu1 * self.norm(f1) + mu2 * self.norm(f2);
        (self.norm(&r1) + self.norm(&r2)) / scale
    }
}

pub fn solve_sp(
    p: &Params,
    grid: &Arc<RadialGrid>,
    tol: f64,
    max_iter: usize,
) -> Result<GroundState> {
    let opts = SolverOptions {
        tol,
        max_iter,
        ..SolverOptions::default()
    };
    solve_sp_from(p, grid, &opts, &default_seed(p, grid))
}

/// Positive Gaussian seed A exp(-μj r²/4), A = max(μ1, μ2).
pub fn default_seed(p: &Params, grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
    let a = p.mu1().max(p.mu2());
    gaussian_seed(grid, (a, p.mu1() / 4.0), (a, p.mu2() / 4.0))
}

fn gaussian_seed(grid: &RadialGrid, g1: (f64, f64), g2: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let f = |(a, b): (f64, f64)| -> Vec<f64> {
        let mut v: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|r| a * (-b * r * r).exp())
            .collect();
        *v.last_mut().unwrap() = 0.0;
        v
    };
    (f(g1), f(g2))
}

pub fn solve_sp_from(
    p: &Params,
    grid: &Arc<RadialGrid>,
    opts: &SolverOptions,
    seed: &(Vec<f64>, Vec<f64>),
) -> Result<GroundState> {
    p.check_grid(grid)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::Domain(format!(
            "relaxation must lie in (0, 1], got {}",
            opts.relaxation
        )));
    }
    let n = grid.npts();
    if seed.0.len() != n || seed.1.len() != n {
        return Err(Error::Domain("seed length does not match the grid".into()));
    }
    let it = Iterate { grid, p };
    let ops = Helmholtz::new(grid, p);
    let (mut f1, mut f2) = seed.clone();
    f1[n - 1] = 0.0;
    f2[n - 1] = 0.0;
    let theta = opts.relaxation;
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let n1: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| 2.0 * a * b).collect();
        let n2: Vec<f64> = f1.iter().map(|a| a * a).collect();
        let num =
            it.inner(&it.apply_op(&f1, p.mu1()), &f1) + it.inner(&it.apply_op(&f2, p.mu2()), &f2);
        let den = it.inner(&n1, &f1) + it.inner(&n2, &f2);
        let s = num / den;
        if !(den > 0.0 && s > 0.0 && s.is_finite()) {
            return Err(Error::DegenerateIterate {
                iteration: iter,
                stabilizer: s,
            });
        }
        let s2 = s * s;
        let mut w1 = n1[..n - 1].to_vec();
        let mut w2 = n2[..n - 1].to_vec();
        ops.lu1.solve_in_place(&mut w1);
        ops.lu2.solve_in_place(&mut w2);
        let mut diff = 0.0;
        let mut size = 0.0;
        for j in 0..n - 1 {
            let a = theta * s2 * w1[j] + (1.0 - theta) * f1[j];
            let b = theta * s2 * w2[j] + (1.0 - theta) * f2[j];
            let wj = grid.weights()[j];
            diff += wj * ((a - f1[j]).powi(2) + (b - f2[j]).powi(2));
            size += wj * (a * a + b * b);
            f1[j] = a;
            f2[j] = b;
        }
        let change = (diff / size).sqrt();
        residual = it.residual(&f1, &f2);
        if !residual.is_finite() {
            return Err(Error::DegenerateIterate {
                iteration: iter,
                stabilizer: s,
            });
        }
        if residual <= opts.tol && change <= opts.tol {
            let to_field = |v: Vec<f64>| {
                Field::from_values(
                    grid,
                    v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                )
                .unwrap()
            };
            return Ok(GroundState {
                phi1: to_field(f1),
                phi2: to_field(f2),
                params: *p,
                residual,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blowup2Report {
    /// Second λ-derivative of E along the scaled standing wave at λ = 1.
    pub second_derivative: f64,
    /// {m1² - (5-N)ω²}|φ1|² + {m2² - 4(5-N)ω²}|φ2|².
    pub mass_combination: f64,
    /// (α+2) L(φ) - α² K(ψ).
    pub gap: f64,
}

impl GroundState {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.phi1.grid()
    }

    pub fn pair(&self) -> FieldPair {
        FieldPair::new(self.phi1.clone(), self.phi2.clone()).unwrap()
    }

    pub fn sums(&self) -> PositionSums {
        PositionSums::of(&self.pair())
    }

    /// (φ, ψ) with ψ = (iωφ1, 2iωφ2).
    pub fn standing_wave(&self) -> State {
        let w = self.params.omega;
        State::new(
            self.phi1.clone(),
            self.phi2.clone(),
            self.phi1.scale(Complex64::new(0.0, w)),
            self.phi2.scale(Complex64::new(0.0, 2.0 * w)),
        )
        .unwrap()
    }

    /// K(ψ) = ½(ω²|φ1|² + 4ω²|φ2|²).
    pub fn k_psi(&self) -> f64 {
        let s = self.sums();
        let w2 = self.params.omega * self.params.omega;
        0.5 * (w2 * s.norm1 + 4.0 * w2 * s.norm2)
    }

    pub fn check_blowup2(&self) -> Blowup2Report {
        let p = &self.params;
        let s = self.sums();
        let a = p.alpha();
        let k = self.k_psi();
        let m = s.m(p);
        let l = s.l();
        let w2 = p.omega * p.omega;
        let c = (5 - p.dim) as f64;
        Blowup2Report {
            second_derivative: a * (a + 1.0) * k + a * (a - 1.0) * m - (a + 1.0) * (a + 2.0) * l,
            mass_combination: (p.m1 * p.m1 - c * w2) * s.norm1
                + (p.m2 * p.m2 - 4.0 * c * w2) * s.norm2,
            gap: (a + 2.0) * l - a * a * k,
        }
    }

    pub fn sc2_satisfied(&self) -> bool {
        self.check_blowup2().mass_combination >= 0.0
    }

    /// Same profiles sampled on another grid (cubic interpolation, zero extension).
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> GroundState {
        GroundState {
            phi1: self.phi1.resample(grid),
            phi2: self.phi2.resample(grid),
            ..self.clone()
        }
    }

    /// Resamples onto `grid` and re-converges there, so the result is a
    /// standing wave of that grid's discrete system rather than an interpolant.
    pub fn refine_on(&self, grid: &Arc<RadialGrid>, opts: &SolverOptions) -> Result<GroundState> {
        let re = |f: &Field| {
            f.resample(grid)
                .values()
                .iter()
                .map(|z| z.re)
                .collect::<Vec<_>>()
        };
        solve_sp_from(&self.params, grid, opts, &(re(&self.phi1), re(&self.phi2)))
    }
}

pub fn standing_wave(gs: &GroundState) -> State {
    gs.standing_wave()
}

pub fn check_blowup2(gs: &GroundState) -> Blowup2Report {
    gs.check_blowup2()
}

/// Runs the solver from `count` random positive Gaussian seeds and returns
/// the J_ω of each run that converged.
pub fn multi_init_actions(
    p: &Params,
    grid: &Arc<RadialGrid>,
    opts: &SolverOptions,
    count: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = p.mu1().max(p.mu2());
    (0..count)
        .filter_map(|_| {
            let g1 = (
                a0 * rng.gen_range(0.5..2.0),
                p.mu1() * rng.gen_range(0.1..0.6),
            );
            let g2 = (
                a0 * rng.gen_range(0.5..2.0),
                p.mu2() * rng.gen_range(0.1..0.6),
            );
            solve_sp_from(p, grid, opts, &gaussian_seed(grid, g1, g2)).ok()
        })
        .map(|gs| gs.sums().suite(p).j_omega)
        .collect()
}

use std::f64::consts::PI;

use crate::banded::Banded5;
use crate::error::{Error, Result};

/// Uniform mesh r_j = j h on [0, R] for radial functions on R^N.
///
/// Carries its quadrature weights and the fourth-order radial Laplacian and
/// derivative matrices, so fields sharing a grid (through `Arc`) share them too.
/// Ghost values: even reflection about r = 0, odd reflection about r = R
/// (the profile vanishes at R).
#[derive(Debug, Clone)]
pub struct RadialGrid {
    dim: usize,
    rmax: f64,
    npts: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lap: Banded5,
    deriv: Banded5,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.npts == other.npts && self.rmax == other.rmax
    }
}

pub const MIN_POINTS: usize = 16;

pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension validated on construction"),
    }
}

const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];

impl RadialGrid {
    pub fn new(dim: usize, rmax: f64, npts: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!(
                "grid dimension must be 2 or 3, got {dim}"
            )));
        }
        if !(rmax > 0.0 && rmax.is_finite()) {
            return Err(Error::Domain(format!(
                "grid radius must be positive, got {rmax}"
            )));
        }
        if npts < MIN_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_POINTS} points, got {npts}"
            )));
        }
        let h = rmax / (npts - 1) as f64;
        let mut nodes: Vec<f64> = (0..npts).map(|j| j as f64 * h).collect();
        nodes[npts - 1] = rmax;
        let sigma = sphere_area(dim);
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&r| sigma * r.powi(dim as i32 - 1) * h)
            .collect();
        weights[npts - 1] *= 0.5;
        // Trapezoid on r^{N-1} f(r) with f even: for N = 3 all endpoint
        // corrections vanish at the origin, for N = 2 the first
        // Euler-Maclaurin term contributes h^2/12 * d/dr[r f] at 0.
        weights[0] = if dim == 2 { sigma * h * h / 12.0 } else { 0.0 };

        let lap = Self::build_matrix(npts, |i, k| {
            if i == 0 {
                dim as f64 * D2[k] / (12.0 * h * h)
            } else {
                D2[k] / (12.0 * h * h) + (dim as f64 - 1.0) / nodes[i] * D1[k] / (12.0 * h)
            }
        });
        let deriv = Self::build_matrix(npts, |_, k| D1[k] / (12.0 * h));
        Ok(RadialGrid {
            dim,
            rmax,
            npts,
            h,
            nodes,
            weights,
            lap,
            deriv,
        })
    }

    /// Folds ghost nodes back into the band: f(-r) = f(r), f(R + s) = -f(R - s).
    fn build_matrix(npts: usize, coef: impl Fn(usize, usize) -> f64) -> Banded5 {
        let last = (npts - 1) as isize;
        let mut m = Banded5::zeros(npts);
        for i in 0..npts {
            for k in 0..5 {
                let c = coef(i, k);
                if c == 0.0 {
                    continue;
                }
                let j = i as isize + k as isize - 2;
                let (col, sign) = if j < 0 {
                    (-j, 1.0)
                } else if j > last {
                    (2 * last - j, -1.0)
                } else {
                    (j, 1.0)
                };
                m.add(i, col as usize, sign * c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn rmax(&self) -> f64 {
        self.rmax
    }
    pub fn npts(&self) -> usize {
        self.npts
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn laplacian_matrix(&self) -> &Banded5 {
        &self.lap
    }
    pub fn derivative_matrix(&self) -> &Banded5 {
        &self.deriv
    }

    /// Quadrature of a radial integrand over R^N.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(j, w)| w * g(j)).sum()
    }
}

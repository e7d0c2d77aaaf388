use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Masses, frequency and spatial dimension of the coupled system.
///
/// Construct through [`Params::new`]; deserialization runs the same checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    pub m1: f64,
    pub m2: f64,
    pub omega: f64,
    pub dim: usize,
}

#[derive(Deserialize)]
struct RawParams {
    m1: f64,
    m2: f64,
    omega: f64,
    dim: usize,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        Params::new(r.m1, r.m2, r.omega, r.dim)
    }
}

impl Params {
    pub fn new(m1: f64, m2: f64, omega: f64, dim: usize) -> Result<Self> {
        if !(m1 > 0.0 && m1.is_finite()) || !(m2 > 0.0 && m2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "masses must be positive and finite (m1 = {m1}, m2 = {m2})"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega = {omega} is not finite"
            )));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParams(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        let bound = (m1 * m1).min(m2 * m2 / 4.0);
        if omega * omega >= bound {
            return Err(Error::InvalidParams(format!(
                "standing-wave admissibility requires omega^2 < min(m1^2, m2^2/4): \
                 omega^2 = {} but the bound is {}",
                omega * omega,
                bound
            )));
        }
        Ok(Params { m1, m2, omega, dim })
    }

    pub fn mu1(&self) -> f64 {
        self.m1 * self.m1 - self.omega * self.omega
    }

    pub fn mu2(&self) -> f64 {
        self.m2 * self.m2 - 4.0 * self.omega * self.omega
    }

    pub fn alpha(&self) -> f64 {
        (4 - self.dim) as f64
    }

    /// (5-N) w^2 <= min(m1^2, m2^2/4).
    pub fn sc1_satisfied(&self) -> bool {
        let w2 = self.omega * self.omega;
        (5 - self.dim) as f64 * w2 <= (self.m1 * self.m1).min(self.m2 * self.m2 / 4.0)
    }

    pub(crate) fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::Config(format!(
                "parameters are for N = {} but the grid is for N = {}",
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

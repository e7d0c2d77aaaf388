//! Localized virial quantity I_ρ and the check that -dI_ρ/dt = H when the
//! cutoff is the identity on the solution's support.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{max_drift, EvolveResult, TrajectoryRecord};
use crate::field::{same_grid, State};
use crate::grid::RadialGrid;

/// Φ(x): N on [0,1], cubic smoothstep down to 0 on [1,2], zero beyond.
pub fn cutoff_profile(x: f64, dim: usize) -> f64 {
    let n = dim as f64;
    if x <= 1.0 {
        n
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        n * (1.0 - 3.0 * t * t + 2.0 * t * t * t)
    }
}

fn cutoff_slope(x: f64, dim: usize) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        dim as f64 * (-6.0 * t + 6.0 * t * t)
    }
}

#[derive(Debug, Clone)]
pub struct VirialCutoff {
    pub rho: f64,
    grid: Arc<RadialGrid>,
    /// Φ_ρ at the nodes.
    pub phi_rho: Vec<f64>,
    /// Ψ_ρ at the nodes.
    pub psi_rho: Vec<f64>,
}

impl VirialCutoff {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
}

/// Ψ_ρ(r) = r^{1-N} ∫_0^r Φ_ρ(s) s^{N-1} ds, accumulated cell by cell with the
/// endpoint-corrected trapezoid rule (exact for cubic integrands, so Ψ_ρ = r
/// holds to rounding on the plateau).
pub fn make_cutoff(rho: f64, grid: &Arc<RadialGrid>) -> Result<VirialCutoff> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!(
            "cutoff radius must be positive, got {rho}"
        )));
    }
    let dim = grid.dim();
    let nm1 = dim as i32 - 1;
    let h = grid.h();
    let g = |r: f64| cutoff_profile(r / rho, dim) * r.powi(nm1);
    let dg = |r: f64| {
        cutoff_slope(r / rho, dim) / rho * r.powi(nm1)
            + cutoff_profile(r / rho, dim) * nm1 as f64 * r.powi(nm1 - 1)
    };
    let r = grid.nodes();
    let phi_rho: Vec<f64> = r.iter().map(|&x| cutoff_profile(x / rho, dim)).collect();
    let mut psi_rho = vec![0.0; r.len()];
    let mut acc = 0.0;
    for j in 1..r.len() {
        let (a, b) = (r[j - 1], r[j]);
        acc += 0.5 * h * (g(a) + g(b)) + h * h / 12.0 * (dg(a) - dg(b));
        psi_rho[j] = acc / b.powi(nm1);
    }
    Ok(VirialCutoff {
        rho,
        grid: grid.clone(),
        phi_rho,
        psi_rho,
    })
}

/// Σ_j Re ∫ [Ψ_ρ ∂_r u_j conj(v_j) + ½(Φ_ρ + 4 - N) u_j conj(v_j)] dx.
pub fn i_rho(s: &State, cutoff: &VirialCutoff) -> Result<f64> {
    if !same_grid(s.grid(), &cutoff.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = s.grid();
    let w = grid.weights();
    let shift = 4.0 - grid.dim() as f64;
    let mut total = 0.0;
    for (u, v) in [(s.u1(), s.v1()), (s.u2(), s.v2())] {
        let du = u.radial_derivative();
        for j in 0..grid.npts() {
            let vb = v.values()[j].conj();
            let a = cutoff.psi_rho[j] * (du[j] * vb).re;
            let b = 0.5 * (cutoff.phi_rho[j] + shift) * (u.values()[j] * vb).re;
            total += w[j] * (a + b);
        }
    }
    Ok(total)
}

/// Relative energy drift up to which records count as resolved.
pub const RESOLVED_DRIFT: f64 = 1e-2;
pub const VIRIAL_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialReport {
    pub max_rel_deviation: f64,
    pub rho: f64,
    pub support_radius: f64,
    pub pass: bool,
    /// Last record time used (records after the energy drift exceeds the
    /// resolution gate are excluded).
    pub window_end: f64,
    pub points: usize,
}

pub fn check_virial_identity(traj: &EvolveResult, support_radius: f64) -> Result<VirialReport> {
    let rho = traj.rho.ok_or_else(|| {
        Error::Precondition("trajectory was recorded without a cutoff radius".into())
    })?;
    check_virial_records(&traj.records, rho, support_radius)
}

/// Works on bare records (e.g. read back from CSV).
///
/// -dI/dt at each interior record is the derivative of the quartic through
/// five neighbouring records (centred where possible, shifted inwards at the
/// window ends), compared with H at the same record. Only the initial stretch
/// where the energy is still conserved to [`RESOLVED_DRIFT`] is used; past it
/// the grid no longer resolves the collapsing solution.
pub fn check_virial_records(
    records: &[TrajectoryRecord],
    rho: f64,
    support_radius: f64,
) -> Result<VirialReport> {
    if records.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "virial check needs at least 3 records, got {}",
            records.len()
        )));
    }
    if !(support_radius >= 0.0) {
        return Err(Error::Domain(format!(
            "support radius must be nonnegative, got {support_radius}"
        )));
    }
    let mut window = Vec::new();
    for (k, r) in records.iter().enumerate() {
        let resolved = r.energy.is_finite()
            && r.dilation.is_finite()
            && max_drift(&records[..=k], |x| x.energy) <= RESOLVED_DRIFT;
        let Some(i) = r.i_rho.filter(|_| resolved) else {
            if r.i_rho.is_none() && resolved {
                return Err(Error::Precondition("records carry no I_rho values".into()));
            }
            break;
        };
        window.push((r.t, i, r.dilation));
    }
    if window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} resolved records carry I_rho",
            window.len()
        )));
    }
    let window_end = window.last().unwrap().0;
    if rho < support_radius + window_end {
        return Err(Error::Precondition(format!(
            "cutoff radius {rho} is below support radius + elapsed time = {}",
            support_radius + window_end
        )));
    }
    let n = window.len();
    let mut max_dev: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for k in 1..n - 1 {
        let width = n.min(5);
        let lo = k.saturating_sub(width / 2).min(n - width);
        let hi = lo + width - 1;
        let ts: Vec<f64> = window[lo..=hi].iter().map(|x| x.0).collect();
        let ys: Vec<f64> = window[lo..=hi].iter().map(|x| x.1).collect();
        let d = lagrange_derivative(&ts, &ys, window[k].0);
        max_dev = max_dev.max((-d - window[k].2).abs());
        max_h = max_h.max(window[k].2.abs());
    }
    let max_rel_deviation = if max_h > 0.0 {
        max_dev / max_h
    } else {
        max_dev
    };
    Ok(VirialReport {
        max_rel_deviation,
        rho,
        support_radius,
        pass: max_rel_deviation <= VIRIAL_TOLERANCE,
        window_end,
        points: n.saturating_sub(2),
    })
}

/// Derivative at `x` of the polynomial through (ts, ys).
fn lagrange_derivative(ts: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = ts.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sum = 0.0;
        for m in 0..n {
            if m == i {
                continue;
            }
            let mut prod = 1.0 / (ts[i] - ts[m]);
            for l in 0..n {
                if l != i && l != m {
                    prod *= (x - ts[l]) / (ts[i] - ts[l]);
                }
            }
            sum += prod;
        }
        total += ys[i] * sum;
    }
    total
}

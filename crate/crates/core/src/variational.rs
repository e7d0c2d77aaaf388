//! Scaling roots, the sets A_ω and B_ω, and the scalar functions g and f.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{same_grid, FieldPair, State};
use crate::functionals::{FunctionalReport, PositionSums, StateSums};
use crate::groundstate::GroundState;
use crate::params::Params;

/// Relative tolerance for the equality constraints (charge, L).
pub const EQUALITY_TOL: f64 = 1e-6;

/// g(s) = s^β - 1 - β(s-1) - β(β-1)/2 s^{β-1} (s-1)².
pub fn g_function(s: f64, beta: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("g is defined for s > 0, got {s}")));
    }
    let d = s - 1.0;
    Ok(s.powf(beta) - 1.0 - beta * d - 0.5 * beta * (beta - 1.0) * s.powf(beta - 1.0) * d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GScan {
    pub min_value: f64,
    pub argmin: f64,
    pub pass: bool,
}

/// Evaluates g at s = k/(npts+1), k = 1..npts.
pub fn g_scan(beta: f64, npts: usize) -> Result<GScan> {
    if !(beta > 1.0) {
        return Err(Error::Domain(format!("g-scan needs beta > 1, got {beta}")));
    }
    if npts == 0 {
        return Err(Error::Domain("g-scan needs at least one point".into()));
    }
    let mut best = GScan {
        min_value: f64::INFINITY,
        argmin: f64::NAN,
        pass: true,
    };
    for k in 1..=npts {
        let s = k as f64 / (npts + 1) as f64;
        let v = g_function(s, beta)?;
        if v < best.min_value {
            best.min_value = v;
            best.argmin = s;
        }
        best.pass &= v > 0.0;
    }
    Ok(best)
}

pub fn g_positivity_scan(beta: f64, npts: usize) -> Result<bool> {
    Ok(g_scan(beta, npts)?.pass)
}

/// λ0 with K_ω(u^λ0) = 0.
pub fn nehari_root(u: &FieldPair, p: &Params) -> Result<f64> {
    let s = PositionSums::of(u);
    let den = 3.0 * s.g - s.grad1 - s.grad2;
    if !(den > 0.0) {
        return Err(Error::NoRoot(format!(
            "3G - sum |grad u|^2 = {den} is not positive"
        )));
    }
    Ok((2.0 * s.m_omega(p) / den).sqrt())
}

/// λ0 with P_ω(u^λ0) = 0.
pub fn pomega_root(u: &FieldPair, p: &Params) -> Result<f64> {
    let s = PositionSums::of(u);
    let l = s.l();
    if !(l > 0.0) {
        return Err(Error::NoRoot(format!("L = {l} is not positive")));
    }
    let a = p.alpha();
    Ok((a * s.m_omega(p) / ((a + 2.0) * l)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vc3Report {
    pub m_omega_gap: f64,
    pub l_gap: f64,
    pub pass: bool,
}

/// M_ω(u) - M_ω(φ) and L(u) - L(φ) for a pair with P_ω(u) < 0.
pub fn check_vc3(u: &FieldPair, gs: &GroundState) -> Result<Vc3Report> {
    let p = &gs.params;
    let su = PositionSums::of(u);
    let pw = su.suite(p).p_omega;
    if !(pw < 0.0) {
        return Err(Error::Precondition(format!(
            "P_omega(u) = {pw:e} is not negative"
        )));
    }
    let sg = gs.sums();
    let m_omega_gap = su.m_omega(p) - sg.m_omega(p);
    let l_gap = su.l() - sg.l();
    Ok(Vc3Report {
        m_omega_gap,
        l_gap,
        pass: m_omega_gap > 0.0 && l_gap > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetMembership {
    pub in_a: bool,
    pub in_b: bool,
    /// S_ω(φ,ψ) - S_ω(s).
    pub action_slack: f64,
    /// -P_ω(u).
    pub p_omega_slack: f64,
    /// E(φ,ψ) - E(s).
    pub energy_slack: f64,
    /// Q(s) - Q(φ,ψ).
    pub charge_gap: f64,
    /// -H(s).
    pub dilation_slack: f64,
}

fn reports(s: &State, gs: &GroundState) -> Result<(FunctionalReport, FunctionalReport)> {
    if !same_grid(s.grid(), gs.grid()) {
        return Err(Error::GridMismatch);
    }
    let p = &gs.params;
    let rs = FunctionalReport::evaluate(s, p)?;
    let rg = FunctionalReport::evaluate(&gs.standing_wave(), p)?;
    Ok((rs, rg))
}

fn charge_matches(q: f64, q_ref: f64) -> bool {
    (q - q_ref).abs() <= EQUALITY_TOL * q_ref.abs()
}

pub fn membership(s: &State, gs: &GroundState) -> Result<SetMembership> {
    let (rs, rg) = reports(s, gs)?;
    let m = SetMembership {
        in_a: false,
        in_b: false,
        action_slack: rg.s_omega - rs.s_omega,
        p_omega_slack: -rs.p_omega,
        energy_slack: rg.energy - rs.energy,
        charge_gap: rs.charge - rg.charge,
        dilation_slack: -rs.h,
    };
    Ok(SetMembership {
        in_a: m.action_slack > 0.0 && m.p_omega_slack > 0.0,
        in_b: m.energy_slack > 0.0
            && charge_matches(rs.charge, rg.charge)
            && m.dilation_slack > 0.0
            && m.p_omega_slack > 0.0,
        ..m
    })
}

/// α(λ^{-α} + λ^α) K(v) - {αλ^{α+2} - (α+2)λ^α} L(u).
pub fn f_function(s: &State, p: &Params, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("f needs lambda > 0, got {lambda}")));
    }
    let sums = StateSums::of(s);
    Ok(f_closed_form(p.alpha(), sums.k(), sums.pos.l(), lambda))
}

pub fn f_closed_form(alpha: f64, k: f64, l: f64, lambda: f64) -> f64 {
    let a = alpha;
    a * (lambda.powf(-a) + lambda.powf(a)) * k
        - (a * lambda.powf(a + 2.0) - (a + 2.0) * lambda.powf(a)) * l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyPropositionReport {
    /// αE(s) - H(s) - αE(φ,ψ).
    pub slack: f64,
    pub pass: bool,
}

pub fn check_key_proposition(s: &State, gs: &GroundState) -> Result<KeyPropositionReport> {
    let (rs, rg) = reports(s, gs)?;
    let mut failed = Vec::new();
    if !(rs.h <= 0.0) {
        failed.push(format!("H(s) = {:e} > 0", rs.h));
    }
    if !charge_matches(rs.charge, rg.charge) {
        failed.push(format!(
            "Q(s) = {} differs from Q(standing wave) = {}",
            rs.charge, rg.charge
        ));
    }
    if !(rs.p_omega < 0.0) {
        failed.push(format!("P_omega(u) = {:e} is not negative", rs.p_omega));
    }
    if !failed.is_empty() {
        return Err(Error::Precondition(failed.join("; ")));
    }
    let a = gs.params.alpha();
    let slack = a * rs.energy - rs.h - a * rg.energy;
    Ok(KeyPropositionReport {
        slack,
        pass: slack >= -EQUALITY_TOL * (a * rg.energy).abs(),
    })
}

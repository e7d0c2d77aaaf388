//! Leapfrog integration of
//!   u1_tt - Δu1 + m1² u1 = 2 conj(u1) u2,   u2_tt - Δu2 + m2² u2 = u1².

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm_sq_slice, Field, FieldPair, State};
use crate::functionals::FunctionalReport;
use crate::grid::RadialGrid;
use crate::params::Params;
use crate::virial::{i_rho, make_cutoff, VirialCutoff};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub blowup_factor: f64,
    pub cfl_limit: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt: 0.01,
            t_end: 10.0,
            record_every: 10,
            blowup_factor: 1e4,
            cfl_limit: 0.5,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.blowup_factor > 1.0) {
            return bad(format!(
                "blowup_factor must exceed 1, got {}",
                self.blowup_factor
            ));
        }
        if !(self.cfl_limit > 0.0) {
            return bad(format!(
                "cfl_limit must be positive, got {}",
                self.cfl_limit
            ));
        }
        if self.dt > self.cfl_limit * grid.h() {
            return bad(format!(
                "dt = {} violates dt <= cfl_limit * h = {}",
                self.dt,
                self.cfl_limit * grid.h()
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
    #[serde(rename = "H")]
    pub dilation: f64,
    #[serde(rename = "P_omega")]
    pub p_omega: f64,
    #[serde(rename = "S_omega")]
    pub action: f64,
    pub xnorm: f64,
    #[serde(rename = "I_rho")]
    pub i_rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowupDetected,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    pub records: Vec<TrajectoryRecord>,
    pub outcome: Outcome,
    /// Last time at which the state was finite (t_end for completed runs).
    pub t_final: f64,
    pub initial_xnorm: f64,
    pub max_xnorm: f64,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveSummary {
    pub outcome: Outcome,
    pub t_final: f64,
    pub max_xnorm: f64,
    #[serde(rename = "drift_E")]
    pub drift_e: f64,
    #[serde(rename = "drift_Q")]
    pub drift_q: f64,
}

/// max |x(t) - x(0)| / |x(0)| over the records (absolute if x(0) = 0).
pub fn max_drift(records: &[TrajectoryRecord], f: impl Fn(&TrajectoryRecord) -> f64) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let x0 = f(first);
    let scale = if x0 == 0.0 { 1.0 } else { x0.abs() };
    records
        .iter()
        .map(|r| (f(r) - x0).abs() / scale)
        .fold(0.0, f64::max)
}

impl EvolveResult {
    pub fn drift_e(&self) -> f64 {
        max_drift(&self.records, |r| r.energy)
    }

    pub fn drift_q(&self) -> f64 {
        max_drift(&self.records, |r| r.charge)
    }

    pub fn summary(&self) -> EvolveSummary {
        EvolveSummary {
            outcome: self.outcome,
            t_final: self.t_final,
            max_xnorm: self.max_xnorm,
            drift_e: self.drift_e(),
            drift_q: self.drift_q(),
        }
    }
}

/// (Δu1 - m1² u1 + 2 conj(u1) u2, Δu2 - m2² u2 + u1²).
pub fn rhs(s: &State, p: &Params) -> FieldPair {
    let grid = s.grid();
    let mut a = [
        vec![Complex64::default(); grid.npts()],
        vec![Complex64::default(); grid.npts()],
    ];
    rhs_into(grid, p, s.u1().values(), s.u2().values(), &mut a);
    let [a1, a2] = a;
    FieldPair::new(
        Field::from_values(grid, a1).unwrap(),
        Field::from_values(grid, a2).unwrap(),
    )
    .unwrap()
}

fn rhs_into(
    grid: &RadialGrid,
    p: &Params,
    u1: &[Complex64],
    u2: &[Complex64],
    out: &mut [Vec<Complex64>; 2],
) {
    let lap = grid.laplacian_matrix();
    let [o1, o2] = out;
    lap.apply(u1, o1);
    lap.apply(u2, o2);
    let (k1, k2) = (p.m1 * p.m1, p.m2 * p.m2);
    for j in 0..u1.len() {
        o1[j] += -k1 * u1[j] + 2.0 * u1[j].conj() * u2[j];
        o2[j] += -k2 * u2[j] + u1[j] * u1[j];
    }
    let last = u1.len() - 1;
    o1[last] = Complex64::default();
    o2[last] = Complex64::default();
}

/// Two-level leapfrog stepper u^{n+1} = 2u^n - u^{n-1} + dt² rhs(u^n).
///
/// After each [`advance`](Leapfrog::advance) the previous level together with
/// its centred velocity (u^{n+1} - u^{n-1}) / (2 dt) is available as
/// [`observed_state`](Leapfrog::observed_state).
pub struct Leapfrog {
    grid: Arc<RadialGrid>,
    params: Params,
    dt: f64,
    prev: [Vec<Complex64>; 2],
    curr: [Vec<Complex64>; 2],
    next: [Vec<Complex64>; 2],
    vel: [Vec<Complex64>; 2],
    steps: i64,
    direction: i64,
}

impl Leapfrog {
    /// Bootstraps u^{-1} = u^0 - dt v^0 + dt²/2 rhs(u^0).
    pub fn new(s0: &State, p: &Params, dt: f64) -> Result<Self> {
        p.check_grid(s0.grid())?;
        let grid = s0.grid().clone();
        let n = grid.npts();
        let zero = || [vec![Complex64::default(); n], vec![Complex64::default(); n]];
        let curr = [s0.u1().values().to_vec(), s0.u2().values().to_vec()];
        let mut acc = zero();
        rhs_into(&grid, p, &curr[0], &curr[1], &mut acc);
        let vel0 = [s0.v1().values(), s0.v2().values()];
        let mut prev = zero();
        for c in 0..2 {
            for j in 0..n - 1 {
                prev[c][j] = curr[c][j] - vel0[c][j] * dt + acc[c][j] * (0.5 * dt * dt);
            }
        }
        Ok(Leapfrog {
            grid,
            params: *p,
            dt,
            prev,
            curr,
            next: zero(),
            vel: [vel0[0].to_vec(), vel0[1].to_vec()],
            steps: 0,
            direction: 1,
        })
    }

    pub fn advance(&mut self) {
        let n = self.grid.npts();
        let dt2 = self.dt * self.dt;
        let inv = 1.0 / (2.0 * self.dt);
        rhs_into(
            &self.grid,
            &self.params,
            &self.curr[0],
            &self.curr[1],
            &mut self.next,
        );
        for c in 0..2 {
            for j in 0..n {
                let nx = 2.0 * self.curr[c][j] - self.prev[c][j] + self.next[c][j] * dt2;
                self.vel[c][j] = (nx - self.prev[c][j]) * inv * self.direction as f64;
                self.next[c][j] = nx;
            }
        }
        std::mem::swap(&mut self.prev, &mut self.curr);
        std::mem::swap(&mut self.curr, &mut self.next);
        self.steps += self.direction;
    }

    /// Swaps the two time levels, so subsequent steps run backwards in time.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.curr);
        self.direction = -self.direction;
        self.steps += self.direction;
    }

    /// Time of the current (newest) level.
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Time of the observed level (one step behind the newest).
    pub fn observed_time(&self) -> f64 {
        (self.steps - self.direction) as f64 * self.dt
    }

    /// Newest position level u^{n+1}.
    pub fn current_position(&self) -> FieldPair {
        self.pair(&self.curr)
    }

    /// Level u^n with its centred velocity, as of the last advance.
    pub fn observed_state(&self) -> State {
        State::from_pairs(self.pair(&self.prev), self.pair(&self.vel)).unwrap()
    }

    fn pair(&self, v: &[Vec<Complex64>; 2]) -> FieldPair {
        FieldPair::new(
            Field::from_values(&self.grid, v[0].clone()).unwrap(),
            Field::from_values(&self.grid, v[1].clone()).unwrap(),
        )
        .unwrap()
    }

    /// X-norm of the observed level.
    pub fn observed_xnorm(&self) -> f64 {
        let w = self.grid.weights();
        let d = self.grid.derivative_matrix();
        let mut buf = vec![Complex64::default(); self.grid.npts()];
        let mut total = 0.0;
        for c in 0..2 {
            d.apply(&self.prev[c], &mut buf);
            total += norm_sq_slice(w, &self.prev[c])
                + norm_sq_slice(w, &buf)
                + norm_sq_slice(w, &self.vel[c]);
        }
        total.sqrt()
    }
}

/// Single explicit step from two position levels; returns u^{n+1}.
pub fn step_leapfrog(prev: &FieldPair, curr: &FieldPair, p: &Params, dt: f64) -> Result<FieldPair> {
    if !crate::field::same_grid(prev.grid(), curr.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = curr.grid();
    let n = grid.npts();
    let mut acc = [vec![Complex64::default(); n], vec![Complex64::default(); n]];
    rhs_into(
        grid,
        p,
        curr.first().values(),
        curr.second().values(),
        &mut acc,
    );
    let mut out = [vec![Complex64::default(); n], vec![Complex64::default(); n]];
    for (c, (pv, cv)) in [(prev.first(), curr.first()), (prev.second(), curr.second())]
        .iter()
        .enumerate()
    {
        for j in 0..n {
            out[c][j] = 2.0 * cv.values()[j] - pv.values()[j] + acc[c][j] * (dt * dt);
        }
    }
    let [a, b] = out;
    let next = FieldPair::new(Field::from_values(grid, a)?, Field::from_values(grid, b)?)?;
    if !(next.first().is_finite() && next.second().is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite values in leapfrog step".into(),
        ));
    }
    Ok(next)
}

/// Growth over the initial X-norm that turns an overflow into a blow-up
/// rather than a numerical failure.
pub const OVERFLOW_GROWTH: f64 = 10.0;

pub fn evolve(
    s0: &State,
    p: &Params,
    cfg: &EvolveConfig,
    rho: Option<f64>,
) -> Result<EvolveResult> {
    evolve_with(s0, p, cfg, rho, |_, _| {})
}

/// Like [`evolve`], calling `observer` with every record and its state.
pub fn evolve_with(
    s0: &State,
    p: &Params,
    cfg: &EvolveConfig,
    rho: Option<f64>,
    mut observer: impl FnMut(&TrajectoryRecord, &State),
) -> Result<EvolveResult> {
    p.check_grid(s0.grid())?;
    cfg.validate(s0.grid())?;
    let cutoff = rho.map(|r| make_cutoff(r, s0.grid())).transpose()?;
    let record =
        |s: &State, t: f64, xnorm: f64, cutoff: &Option<VirialCutoff>| -> TrajectoryRecord {
            let r = FunctionalReport::evaluate(s, p).expect("grid checked above");
            TrajectoryRecord {
                t,
                energy: r.energy,
                charge: r.charge,
                dilation: r.h,
                p_omega: r.p_omega,
                action: r.s_omega,
                xnorm,
                i_rho: cutoff
                    .as_ref()
                    .map(|c| i_rho(s, c).expect("grid checked above")),
            }
        };

    let n_steps = cfg.steps();
    let mut lf = Leapfrog::new(s0, p, cfg.dt)?;
    let mut records = Vec::new();
    let x0 = s0.xnorm();
    let mut max_x = x0;
    let mut last_finite = (0.0, x0);
    for n in 0..=n_steps {
        lf.advance();
        let t = n as f64 * cfg.dt;
        let x = lf.observed_xnorm();
        if !x.is_finite() {
            let outcome = if x0 > 0.0 && last_finite.1 >= OVERFLOW_GROWTH * x0 {
                Outcome::BlowupDetected
            } else {
                Outcome::NumericalFailure
            };
            return Ok(EvolveResult {
                records,
                outcome,
                t_final: last_finite.0,
                initial_xnorm: x0,
                max_xnorm: max_x,
                rho,
            });
        }
        max_x = max_x.max(x);
        last_finite = (t, x);
        let blown = x0 > 0.0 && x >= cfg.blowup_factor * x0;
        if n % cfg.record_every == 0 || blown {
            let s = lf.observed_state();
            let rec = record(&s, t, x, &cutoff);
            observer(&rec, &s);
            records.push(rec);
        }
        if blown {
            return Ok(EvolveResult {
                records,
                outcome: Outcome::BlowupDetected,
                t_final: t,
                initial_xnorm: x0,
                max_xnorm: max_x,
                rho,
            });
        }
    }
    Ok(EvolveResult {
        records,
        outcome: Outcome::Completed,
        t_final: n_steps as f64 * cfg.dt,
        initial_xnorm: x0,
        max_xnorm: max_x,
        rho,
    })
}

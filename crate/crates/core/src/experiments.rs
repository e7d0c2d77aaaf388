//! The strong-instability pipeline: ground state, scaled standing waves,
//! membership in B_ω, evolution and blow-up detection.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, max_drift, EvolveConfig, Outcome, TrajectoryRecord};
use crate::field::scale_state;
use crate::functionals::FunctionalReport;
use crate::grid::RadialGrid;
use crate::groundstate::{default_seed, solve_sp_from, Blowup2Report, GroundState, SolverOptions};
use crate::params::Params;
use crate::variational::{membership, SetMembership};
use crate::virial::{check_virial_records, VirialReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rmax: f64,
    pub npts: usize,
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(RadialGrid::new(dim, self.rmax, self.npts)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSpec {
            tol: o.tol,
            max_iter: o.max_iter,
            relaxation: o.relaxation,
        }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            relaxation: self.relaxation,
        }
    }
}

pub const DEFAULT_LAMBDAS: [f64; 5] = [0.98, 1.0, 1.02, 1.05, 1.1];

pub fn default_ground_grid() -> GridSpec {
    GridSpec {
        rmax: 20.0,
        npts: 4096,
    }
}

pub fn default_dynamics_grid() -> GridSpec {
    GridSpec {
        rmax: 60.0,
        npts: 2048,
    }
}

/// Time stepping for the experiment. The λ = 1 standing wave is linearly
/// unstable, so the O(dt²) phase error of the scheme seeds growth; dt = 1e-3
/// keeps that seed small enough over t ≤ 10.
pub fn default_experiment_evolve() -> EvolveConfig {
    EvolveConfig {
        dt: 1e-3,
        t_end: 10.0,
        record_every: 50,
        blowup_factor: 1e4,
        cfl_limit: 0.5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: Params,
    #[serde(default = "default_ground_grid")]
    pub ground_grid: GridSpec,
    #[serde(default = "default_dynamics_grid")]
    pub dynamics_grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Re-converge the ground state on the dynamics grid after resampling.
    #[serde(default = "yes")]
    pub refine_on_dynamics_grid: bool,
    #[serde(default = "default_lambdas")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "default_experiment_evolve")]
    pub evolve: EvolveConfig,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Radius containing the initial data, used by the virial check.
    #[serde(default = "default_support")]
    pub support_radius: f64,
    /// Conservation is judged over records with X-norm below this multiple
    /// of the initial one (the scheme is resolved there).
    #[serde(default = "default_gate")]
    pub conservation_window: f64,
    /// Cap on concurrent λ runs (None: one per λ).
    #[serde(default)]
    pub threads: Option<usize>,
}

fn yes() -> bool {
    true
}
fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDAS.to_vec()
}
fn default_rho() -> f64 {
    50.0
}
fn default_support() -> f64 {
    20.0
}
fn default_gate() -> f64 {
    2.0
}

impl ExperimentConfig {
    pub fn new(params: Params) -> Self {
        ExperimentConfig {
            params,
            ground_grid: default_ground_grid(),
            dynamics_grid: default_dynamics_grid(),
            solver: SolverSpec::default(),
            refine_on_dynamics_grid: true,
            lambda_list: default_lambdas(),
            evolve: default_experiment_evolve(),
            rho: default_rho(),
            support_radius: default_support(),
            conservation_window: default_gate(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_list.is_empty() {
            return Err(Error::Config("lambda_list is empty".into()));
        }
        if let Some(l) = self
            .lambda_list
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::Config(format!(
                "lambda values must be positive, got {l}"
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Config(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.conservation_window > 1.0) {
            return Err(Error::Config("conservation_window must exceed 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let grid = self.dynamics_grid.build(self.params.dim)?;
        self.evolve.validate(&grid)?;
        self.ground_grid.build(self.params.dim)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateSummary {
    pub residual: f64,
    pub iterations: usize,
    #[serde(rename = "J_omega")]
    pub j_omega: f64,
    #[serde(rename = "M_omega")]
    pub m_omega: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "K_psi")]
    pub k_psi: f64,
    #[serde(rename = "P_omega")]
    pub p_omega: f64,
    #[serde(rename = "K_omega")]
    pub k_omega: f64,
    pub phi1_at_origin: f64,
}

impl GroundStateSummary {
    pub fn of(gs: &GroundState) -> Self {
        let s = gs.sums();
        let suite = s.suite(&gs.params);
        GroundStateSummary {
            residual: gs.residual,
            iterations: gs.iterations,
            j_omega: suite.j_omega,
            m_omega: suite.m_omega,
            l: s.l(),
            k_psi: gs.k_psi(),
            p_omega: suite.p_omega,
            k_omega: suite.k_omega,
            phi1_at_origin: gs.phi1.values()[0].re,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEntry {
    pub lambda: f64,
    pub in_a: bool,
    pub in_b: bool,
    pub membership: SetMembership,
    pub outcome: Outcome,
    /// Indicator only: near blow-up the grid no longer resolves the solution.
    pub t_final: f64,
    pub initial_xnorm: f64,
    pub max_xnorm: f64,
    /// max |x(t)/x(0) - 1| over all records.
    pub max_xnorm_deviation: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub p_omega_min: f64,
    pub p_omega_max: f64,
    pub h_negative_at_all_records: bool,
    pub p_omega_negative_at_all_records: bool,
    /// Drifts over the resolved window (X-norm below the conservation window).
    #[serde(rename = "drift_E")]
    pub drift_e: f64,
    #[serde(rename = "drift_Q")]
    pub drift_q: f64,
    /// Drifts over every record up to the end of the run.
    #[serde(rename = "drift_E_full")]
    pub drift_e_full: f64,
    #[serde(rename = "drift_Q_full")]
    pub drift_q_full: f64,
    pub reliable: bool,
    pub virial: Option<VirialReport>,
    pub records_count: usize,
    #[serde(skip)]
    pub records: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub params: Params,
    pub sc1_satisfied: bool,
    pub sc2_satisfied: bool,
    pub blowup2: Blowup2Report,
    pub ground_state: GroundStateSummary,
    /// Summary of the profile actually evolved (after resampling/refinement).
    pub dynamics_ground_state: GroundStateSummary,
    pub entries: Vec<LambdaEntry>,
    /// Largest virial deviation over λ > 1 entries where the check applies.
    pub virial_max_rel_deviation: Option<f64>,
}

/// Conservation threshold for [`LambdaEntry::reliable`].
pub const RELIABLE_DRIFT: f64 = 1e-2;

pub fn run_instability(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let p = cfg.params;
    let opts = cfg.solver.options();
    let fine = cfg.ground_grid.build(p.dim)?;
    let gs = solve_sp_from(&p, &fine, &opts, &default_seed(&p, &fine))?;
    let coarse = cfg.dynamics_grid.build(p.dim)?;
    let dyn_gs = if cfg.refine_on_dynamics_grid {
        gs.refine_on(&coarse, &opts)?
    } else {
        gs.resample(&coarse)
    };

    let run = |lambda: f64| -> Result<LambdaEntry> { run_lambda(cfg, &dyn_gs, lambda) };
    let threads = cfg
        .threads
        .unwrap_or(cfg.lambda_list.len())
        .min(cfg.lambda_list.len())
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let entries: Vec<LambdaEntry> = pool.install(|| {
        cfg.lambda_list
            .par_iter()
            .map(|&l| run(l))
            .collect::<Result<Vec<_>>>()
    })?;

    let virial_max_rel_deviation = entries
        .iter()
        .filter(|e| e.lambda > 1.0)
        .filter_map(|e| e.virial.map(|v| v.max_rel_deviation))
        .reduce(f64::max);
    Ok(ExperimentReport {
        params: p,
        sc1_satisfied: p.sc1_satisfied(),
        sc2_satisfied: gs.sc2_satisfied(),
        blowup2: gs.check_blowup2(),
        ground_state: GroundStateSummary::of(&gs),
        dynamics_ground_state: GroundStateSummary::of(&dyn_gs),
        entries,
        virial_max_rel_deviation,
    })
}

fn run_lambda(cfg: &ExperimentConfig, gs: &GroundState, lambda: f64) -> Result<LambdaEntry> {
    let s0 = scale_state(&gs.standing_wave(), lambda)?;
    let m = membership(&s0, gs)?;
    let res = evolve(&s0, &gs.params, &cfg.evolve, Some(cfg.rho))?;
    let recs = &res.records;
    let fold = |f: fn(&TrajectoryRecord) -> f64| {
        recs.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (h_min, h_max) = fold(|r| r.dilation);
    let (p_min, p_max) = fold(|r| r.p_omega);
    let x0 = res.initial_xnorm;
    let resolved: Vec<TrajectoryRecord> = recs
        .iter()
        .take_while(|r| r.xnorm <= cfg.conservation_window * x0 || x0 == 0.0)
        .copied()
        .collect();
    let drift_e = max_drift(&resolved, |r| r.energy);
    let drift_q = max_drift(&resolved, |r| r.charge);
    let max_xnorm_deviation = if x0 > 0.0 {
        recs.iter()
            .map(|r| (r.xnorm / x0 - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(LambdaEntry {
        lambda,
        in_a: m.in_a,
        in_b: m.in_b,
        membership: m,
        outcome: res.outcome,
        t_final: res.t_final,
        initial_xnorm: x0,
        max_xnorm: res.max_xnorm,
        max_xnorm_deviation,
        h_min,
        h_max,
        p_omega_min: p_min,
        p_omega_max: p_max,
        h_negative_at_all_records: recs.iter().all(|r| r.dilation < 0.0),
        p_omega_negative_at_all_records: recs.iter().all(|r| r.p_omega < 0.0),
        drift_e,
        drift_q,
        drift_e_full: res.drift_e(),
        drift_q_full: res.drift_q(),
        reliable: drift_e <= RELIABLE_DRIFT && drift_q <= RELIABLE_DRIFT,
        virial: check_virial_records(recs, cfg.rho, cfg.support_radius).ok(),
        records_count: recs.len(),
        records: res.records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRow {
    pub lambda: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "P_omega")]
    pub p_omega: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
    #[serde(rename = "E_interp")]
    pub energy_interp: f64,
    #[serde(rename = "H_interp")]
    pub h_interp: f64,
    #[serde(rename = "P_omega_interp")]
    pub p_omega_interp: f64,
    #[serde(rename = "Q_interp")]
    pub charge_interp: f64,
}

/// E, H, P_ω, Q along the scaled standing wave: closed forms in λ, and the
/// same quantities re-evaluated on interpolated scaled profiles.
pub fn scan_lambda_energy(gs: &GroundState, lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    let p = &gs.params;
    let sw = gs.standing_wave();
    let r1 = FunctionalReport::evaluate(&sw, p)?;
    let a = p.alpha();
    let (k, m, l, mw) = (r1.k, r1.m, r1.l, r1.m_omega);
    lambdas
        .iter()
        .map(|&lam| {
            let rs = FunctionalReport::evaluate(&scale_state(&sw, lam)?, p)?;
            let (la, lm, lp) = (lam.powf(a), lam.powf(-a), lam.powf(a + 2.0));
            Ok(LambdaRow {
                lambda: lam,
                energy: lm * k + la * m - lp * l,
                h: -a * lm * k + a * la * m - (a + 2.0) * lp * l,
                p_omega: a * la * mw - (a + 2.0) * lp * l,
                charge: r1.charge,
                energy_interp: rs.energy,
                h_interp: rs.h,
                p_omega_interp: rs.p_omega,
                charge_interp: rs.charge,
            })
        })
        .collect()
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlkg_core::evolution::{evolve_with, EvolveConfig, Outcome};
use nlkg_core::experiments::{
    default_ground_grid, run_instability, ExperimentConfig, GridSpec, SolverSpec,
};
use nlkg_core::field::scale_state;
use nlkg_core::groundstate::{default_seed, multi_init_actions, solve_sp_from, GroundState};
use nlkg_core::io::{
    read_state_csv, read_trajectory_csv, write_atomic, write_json, write_state_csv,
    write_trajectory_csv, write_trajectory_row, TRAJECTORY_HEADER,
};
use nlkg_core::variational::g_scan;
use nlkg_core::virial::check_virial_records;
use nlkg_core::{Error, FunctionalReport, Params, Result};
use serde::{Deserialize, Serialize};

/// Crate version plus the version of the CSV/JSON layouts written here.
const LONG_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (output format 1)");

#[derive(Parser)]
#[command(name = "nlkg", version = LONG_VERSION, about = "Radial coupled Klein-Gordon toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    m1: Option<f64>,
    #[arg(long, global = true)]
    m2: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Scaling of the initial data (instability: replaces the λ list).
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Cutoff radius of the localized virial quantity.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input CSV (a state, or a trajectory for virial-check).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state and write it as a standing wave.
    GroundState,
    /// Evaluate the conserved and variational functionals of a state.
    Functionals,
    /// Evolve a state and stream its trajectory.
    Evolve,
    /// Scaled standing waves: membership, evolution and blow-up report.
    Instability,
    /// Compare -dI/dt with H along a recorded trajectory.
    VirialCheck,
    /// Scan g(s) on (0,1) for positivity.
    GScan {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 999)]
        npts: usize,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    m1: Option<f64>,
    m2: Option<f64>,
    omega: Option<f64>,
    dim: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiInit {
    #[serde(default = "default_runs")]
    count: usize,
    #[serde(default = "default_seed_value")]
    seed: u64,
}

fn default_runs() -> usize {
    3
}
fn default_seed_value() -> u64 {
    42
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    params: RawParams,
    /// Grid for ground-state, functionals and evolve.
    grid: Option<GridSpec>,
    #[serde(default)]
    solver: SolverSpec,
    multi_init: Option<MultiInit>,
    input: Option<PathBuf>,
    lambda: Option<f64>,
    evolve: Option<EvolveConfig>,
    rho: Option<f64>,
    support_radius: Option<f64>,
    output_dir: Option<PathBuf>,
    ground_grid: Option<GridSpec>,
    dynamics_grid: Option<GridSpec>,
    refine_on_dynamics_grid: Option<bool>,
    lambda_list: Option<Vec<f64>>,
    conservation_window: Option<f64>,
    threads: Option<usize>,
}

struct Ctx {
    file: FileConfig,
    common: Common,
}

impl Ctx {
    fn load(common: Common) -> Result<Ctx> {
        let file = match &common.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => FileConfig::default(),
        };
        Ok(Ctx { file, common })
    }

    fn params(&self) -> Result<Params> {
        let f = &self.file.params;
        let c = &self.common;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::Config(format!(
                    "parameter {name} missing (config params block or --{name})"
                ))
            })
        };
        let dim = c
            .dim
            .or(f.dim)
            .ok_or_else(|| Error::Config("parameter dim missing".into()))?;
        Params::new(
            need(c.m1.or(f.m1), "m1")?,
            need(c.m2.or(f.m2), "m2")?,
            need(c.omega.or(f.omega), "omega")?,
            dim,
        )
    }

    fn out_dir(&self) -> PathBuf {
        self.common
            .out
            .clone()
            .or_else(|| self.file.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn input(&self) -> Result<PathBuf> {
        self.common
            .input
            .clone()
            .or_else(|| self.file.input.clone())
            .ok_or_else(|| Error::Config("no input file (config key input or --input)".into()))
    }

    fn lambda(&self) -> Option<f64> {
        self.common.lambda.or(self.file.lambda)
    }

    fn rho(&self) -> Option<f64> {
        self.common.rho.or(self.file.rho)
    }

    fn solve(&self, p: &Params) -> Result<GroundState> {
        let grid = self
            .file
            .grid
            .unwrap_or_else(default_ground_grid)
            .build(p.dim)?;
        solve_sp_from(
            p,
            &grid,
            &self.file.solver.options(),
            &default_seed(p, &grid),
        )
    }
}

#[derive(Serialize)]
struct GroundStateReport {
    residual: f64,
    iterations: usize,
    #[serde(rename = "J_omega")]
    j_omega: f64,
    #[serde(rename = "M_omega")]
    m_omega: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "K_psi")]
    k_psi: f64,
    blowup2_i: f64,
    blowup2_ii: f64,
    blowup2_iii: f64,
    sc1_satisfied: bool,
    sc2_satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    multi_init: Option<MultiInitReport>,
}

#[derive(Serialize)]
struct MultiInitReport {
    seed: u64,
    #[serde(rename = "J_omega")]
    j_omega: Vec<f64>,
    /// No converged run went below the reported ground state (1e-6 relative).
    minimal: bool,
}

fn ground_state_cmd(ctx: &Ctx) -> Result<ExitCode> {
    let p = ctx.params()?;
    let gs = ctx.solve(&p)?;
    let suite = gs.sums().suite(&p);
    let b = gs.check_blowup2();
    let multi_init = ctx.file.multi_init.as_ref().map(|m| {
        let js = multi_init_actions(&p, gs.grid(), &ctx.file.solver.options(), m.count, m.seed);
        MultiInitReport {
            seed: m.seed,
            minimal: js.iter().all(|&j| j >= suite.j_omega * (1.0 - 1e-6)),
            j_omega: js,
        }
    });
    let report = GroundStateReport {
        residual: gs.residual,
        iterations: gs.iterations,
        j_omega: suite.j_omega,
        m_omega: suite.m_omega,
        l: gs.sums().l(),
        k_psi: gs.k_psi(),
        blowup2_i: b.second_derivative,
        blowup2_ii: b.mass_combination,
        blowup2_iii: b.gap,
        sc1_satisfied: p.sc1_satisfied(),
        sc2_satisfied: gs.sc2_satisfied(),
        multi_init,
    };
    let out = ctx.out_dir();
    write_state_csv(&out.join("ground_state.csv"), &gs.standing_wave())?;
    write_json(&out.join("ground_state.json"), &report)?;
    println!(
        "ground state: residual {:.3e} after {} iterations, J_omega = {:.12e}",
        gs.residual, gs.iterations, suite.j_omega
    );
    Ok(ExitCode::SUCCESS)
}

fn functionals_cmd(ctx: &Ctx) -> Result<ExitCode> {
    let p = ctx.params()?;
    let s = read_state_csv(&ctx.input()?, p.dim)?;
    let report = FunctionalReport::evaluate(&s, &p)?;
    write_json(&ctx.out_dir().join("functionals.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn evolve_cmd(ctx: &Ctx) -> Result<ExitCode> {
    let p = ctx.params()?;
    let cfg = ctx.file.evolve.unwrap_or_default();
    let s0 = match ctx.common.input.clone().or_else(|| ctx.file.input.clone()) {
        Some(path) => read_state_csv(&path, p.dim)?,
        None => ctx.solve(&p)?.standing_wave(),
    };
    let s0 = match ctx.lambda() {
        Some(l) => scale_state(&s0, l)?,
        None => s0,
    };
    cfg.validate(s0.grid())?;
    let out = ctx.out_dir();
    let mut result = None;
    write_atomic(&out.join("trajectory.csv"), |w| {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        let mut failed = None;
        let res = evolve_with(&s0, &p, &cfg, ctx.rho(), |rec, _| {
            if failed.is_none() {
                failed = write_trajectory_row(w, rec).err();
            }
        })?;
        if let Some(e) = failed {
            return Err(e.into());
        }
        result = Some(res);
        Ok(())
    })?;
    let res = result.expect("trajectory written");
    let summary = res.summary();
    write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if res.outcome == Outcome::NumericalFailure {
        eprintln!(
            "error: the evolution produced non-finite values at t = {}",
            res.t_final
        );
        ExitCode::from(4)
    } else {
        ExitCode::SUCCESS
    })
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("NLKG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "NLKG_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn instability_cmd(ctx: &Ctx) -> Result<ExitCode> {
    let f = &ctx.file;
    let mut cfg = ExperimentConfig::new(ctx.params()?);
    if let Some(g) = f.ground_grid {
        cfg.ground_grid = g;
    }
    if let Some(g) = f.dynamics_grid {
        cfg.dynamics_grid = g;
    }
    cfg.solver = f.solver;
    if let Some(b) = f.refine_on_dynamics_grid {
        cfg.refine_on_dynamics_grid = b;
    }
    if let Some(l) = &f.lambda_list {
        cfg.lambda_list = l.clone();
    }
    if let Some(l) = ctx.lambda() {
        cfg.lambda_list = vec![l];
    }
    if let Some(e) = f.evolve {
        cfg.evolve = e;
    }
    if let Some(r) = ctx.rho() {
        cfg.rho = r;
    }
    if let Some(s) = f.support_radius {
        cfg.support_radius = s;
    }
    if let Some(c) = f.conservation_window {
        cfg.conservation_window = c;
    }
    cfg.threads = f.threads;
    if let Some(cap) = thread_cap()? {
        cfg.threads = Some(cfg.threads.unwrap_or(cap).min(cap));
    }
    let report = run_instability(&cfg)?;
    let out = ctx.out_dir();
    for e in &report.entries {
        write_trajectory_csv(
            &out.join(format!("trajectory_lambda_{}.csv", e.lambda)),
            &e.records,
        )?;
    }
    write_json(&out.join("report.json"), &report)?;
    for e in &report.entries {
        let outcome = serde_json::to_value(e.outcome)?;
        println!(
            "lambda {:<6} in_B {:<5} {} t_final {:.3}",
            e.lambda,
            e.in_b,
            outcome.as_str().unwrap_or_default(),
            e.t_final
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VirialOutput {
    max_rel_deviation: f64,
    rho: f64,
    support_radius: f64,
    pass: bool,
}

fn virial_cmd(ctx: &Ctx) -> Result<ExitCode> {
    let records = read_trajectory_csv(&ctx.input()?)?;
    let rho = ctx
        .rho()
        .ok_or_else(|| Error::Config("cutoff radius missing (config key rho or --rho)".into()))?;
    let support = ctx.file.support_radius.unwrap_or(20.0);
    let r = check_virial_records(&records, rho, support)?;
    let out = VirialOutput {
        max_rel_deviation: r.max_rel_deviation,
        rho: r.rho,
        support_radius: r.support_radius,
        pass: r.pass,
    };
    write_json(&ctx.out_dir().join("virial.json"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn g_scan_cmd(beta: f64, npts: usize) -> Result<ExitCode> {
    let s = g_scan(beta, npts)?;
    println!("min g = {:.6e} at s = {:.6}", s.min_value, s.argmin);
    println!("{}", if s.pass { "PASS" } else { "FAIL" });
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Convergence { .. } | Error::DegenerateIterate { .. } => 3,
        Error::NumericalFailure(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Command::GScan { beta, npts } = cli.command {
        return g_scan_cmd(beta, npts);
    }
    let ctx = Ctx::load(cli.common)?;
    match cli.command {
        Command::GroundState => ground_state_cmd(&ctx),
        Command::Functionals => functionals_cmd(&ctx),
        Command::Evolve => evolve_cmd(&ctx),
        Command::Instability => instability_cmd(&ctx),
        Command::VirialCheck => virial_cmd(&ctx),
        Command::GScan { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

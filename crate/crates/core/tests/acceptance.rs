//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p nlkg-core --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use nlkg_core::evolution::{evolve, evolve_with, EvolveConfig, Outcome};
use nlkg_core::experiments::{run_instability, ExperimentConfig};
use nlkg_core::field::{scale_state, State};
use nlkg_core::functionals::{action_s, energy_e, FunctionalReport, PositionSums};
use nlkg_core::params::Params;
use nlkg_core::variational::{check_key_proposition, check_vc3, g_function, g_positivity_scan};
use nlkg_core::virial::check_virial_identity;

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn that(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }
}

fn criterion_1(c: &mut Check) {
    let mut rng = rng(1);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (dim, p) = if k % 2 == 0 {
            (2, resonant_2d())
        } else {
            (3, Params::new(1.0, 2.3, 0.4, 3).unwrap())
        };
        let g = grid(dim, 20.0, 1024);
        let s = random_state(&g, &mut rng);
        let r = FunctionalReport::evaluate(&s, &p).unwrap();
        let a = p.alpha();
        let act = action_s(&s, &p);
        let checks = [
            (r.energy, r.k + r.m - r.l),
            (r.h, -a * r.k + a * r.m - (a + 2.0) * r.l),
            (r.s_omega, r.energy - p.omega * r.charge),
            ((a + 2.0) * r.j_omega - r.p_omega, 2.0 * r.m_omega),
            (a * r.j_omega - r.p_omega, 2.0 * r.l),
            (act.s_omega, act.decomposition),
        ];
        let scale = [r.k, r.m, r.l, r.energy, r.charge, r.m_omega]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        for (lhs, rhs) in checks {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    c.that(
        worst <= 1e-10,
        format!("max identity deviation {worst:.2e} (<= 1e-10)"),
    );
}

fn criterion_2(c: &mut Check) {
    for dim in [2, 3] {
        let p = if dim == 2 {
            resonant_2d()
        } else {
            resonant_3d()
        };
        let g = grid(dim, 20.0, 4096);
        let u1 = gaussian(&g, num_complex::Complex64::new(1.2, 0.3), 1.0);
        let u2 = gaussian(&g, num_complex::Complex64::new(0.6, -0.2), 1.5);
        let v1 = gaussian(&g, num_complex::Complex64::new(0.1, 0.8), 0.8);
        let v2 = gaussian(&g, num_complex::Complex64::new(-0.3, 0.5), 1.2);
        let s = State::new(u1, u2, v1, v2).unwrap();
        let r = FunctionalReport::evaluate(&s, &p).unwrap();
        let a = p.alpha();
        let (mut dq, mut de): (f64, f64) = (0.0, 0.0);
        for lam in [0.5f64, 0.9, 1.1, 2.0] {
            let rl = FunctionalReport::evaluate(&scale_state(&s, lam).unwrap(), &p).unwrap();
            dq = dq.max(rel(rl.charge, r.charge));
            let closed = lam.powf(-a) * r.k + lam.powf(a) * r.m - lam.powf(a + 2.0) * r.l;
            de = de.max(rel(rl.energy, closed));
        }
        let eps = 1e-4;
        let fd = (energy_e(&scale_state(&s, 1.0 + eps).unwrap(), &p)
            - energy_e(&scale_state(&s, 1.0 - eps).unwrap(), &p))
            / (2.0 * eps);
        let dh = rel(fd, r.h);
        c.that(
            dq <= 1e-6,
            format!("N={dim}: Q invariance {dq:.2e} (<= 1e-6)"),
        );
        c.that(
            de <= 1e-4,
            format!("N={dim}: E expansion {de:.2e} (<= 1e-4)"),
        );
        c.that(
            dh <= 1e-5,
            format!("N={dim}: H vs dE/dlambda {dh:.2e} (<= 1e-5)"),
        );
    }
}

fn criterion_3(c: &mut Check) {
    for p in [resonant_2d(), resonant_3d()] {
        let t0 = Instant::now();
        let gs = ground_state(&p, 20.0, 4096);
        let n = p.dim;
        let suite = gs.sums().suite(&p);
        let b = gs.check_blowup2();
        let a = p.alpha();
        let sw = gs.standing_wave();
        let eps = 1e-3;
        let e = |l: f64| energy_e(&scale_state(&sw, l).unwrap(), &p);
        let fd2 = (-e(1.0 + 2.0 * eps) + 16.0 * e(1.0 + eps) - 30.0 * e(1.0) + 16.0 * e(1.0 - eps)
            - e(1.0 - 2.0 * eps))
            / (12.0 * eps * eps);
        let pr = suite.p_omega.abs() / suite.m_omega;
        let kr = suite.k_omega.abs() / suite.m_omega;
        let c1 = (b.second_derivative + a * b.mass_combination).abs() / b.second_derivative.abs();
        let c2 = (b.second_derivative + 2.0 * b.gap).abs() / b.second_derivative.abs();
        let fdr = rel(fd2, b.second_derivative);
        c.that(
            gs.residual <= 1e-8,
            format!(
                "N={n}: residual {:.2e} (<= 1e-8), {} iterations",
                gs.residual, gs.iterations
            ),
        );
        c.that(
            pr <= 1e-6,
            format!("N={n}: |P_omega|/M_omega {pr:.2e} (<= 1e-6)"),
        );
        c.that(
            kr <= 1e-6,
            format!("N={n}: |K_omega|/M_omega {kr:.2e} (<= 1e-6)"),
        );
        c.that(
            c1 <= 1e-8,
            format!("N={n}: (i)+alpha(ii) {c1:.2e} (<= 1e-8)"),
        );
        c.that(c2 <= 1e-8, format!("N={n}: (i)+2(iii) {c2:.2e} (<= 1e-8)"));
        c.that(
            fdr <= 1e-3,
            format!("N={n}: FD second derivative {fdr:.2e} (<= 1e-3)"),
        );
        c.that(
            t0.elapsed().as_secs_f64() < 60.0,
            format!("N={n}: {:.1} s (< 60 s)", t0.elapsed().as_secs_f64()),
        );
    }
}

fn criterion_4(c: &mut Check) {
    let (m1, w) = (1.0f64, 0.5f64);
    let m2 = (m1 * m1 + 3.0 * w * w).sqrt();
    let p = Params::new(m1, m2, w, 2).unwrap();
    let gs = ground_state(&p, 20.0, 4096);
    let g = gs.grid().clone();
    let peak = gs.phi1.max_abs();
    let mut worst: f64 = 0.0;
    for j in 0..g.npts() - 1 {
        let (a, b) = (gs.phi1.values()[j].re, gs.phi2.values()[j].re);
        if a > 1e-8 * peak {
            worst = worst.max(rel(a / b, 2f64.sqrt()));
        }
    }
    let w_s = scalar_ground_state(&g, p.mu1());
    let half: Vec<f64> = w_s.iter().map(|x| x / 2f64.sqrt()).collect();
    let quarter: Vec<f64> = w_s.iter().map(|x| x / 2.0).collect();
    let oracle = PositionSums::of(&pair(real_field(&g, &half), real_field(&g, &quarter))).suite(&p);
    let j = gs.sums().suite(&p).j_omega;
    let dj = rel(j, oracle.j_omega);
    c.that(
        worst <= 1e-6,
        format!("phi1/phi2 = sqrt 2 to {worst:.2e} (<= 1e-6)"),
    );
    c.that(
        dj <= 1e-5,
        format!("J_omega vs scalar oracle {dj:.2e} (<= 1e-5)"),
    );
}

fn criterion_5(c: &mut Check) {
    c.that(
        [1.0001, 1.5, 2.0, 3.0]
            .iter()
            .all(|&b| g_function(1.0, b).unwrap() == 0.0),
        "g(1) = 0 exactly",
    );
    for beta in [2.0, 3.0] {
        c.that(
            g_positivity_scan(beta, 999).unwrap(),
            format!("beta={beta}: g > 0 on 999 points"),
        );
    }
    let worst = (1..=999)
        .map(|k| {
            let s = k as f64 / 1000.0;
            (g_function(s, 2.0).unwrap() - (s - 1.0).powi(2) * (1.0 - s)).abs()
        })
        .fold(0.0f64, f64::max);
    c.that(
        worst <= 1e-14,
        format!("beta=2 closed form {worst:.2e} (<= 1e-14)"),
    );
}

fn criterion_6(c: &mut Check) {
    let p = resonant_2d();
    let gs = ground_state(&p, 20.0, 4096);
    let dyn_grid = grid(2, 60.0, 2048);
    let sw = gs.standing_wave().resample(&dyn_grid);
    let phi0 = gs.phi1.values()[0].re;
    let mut drifts = Vec::new();
    for dt in [0.01, 0.005] {
        let cfg = EvolveConfig {
            dt,
            t_end: 10.0,
            record_every: (0.1 / dt).round() as usize,
            ..Default::default()
        };
        let mut modulus: f64 = 0.0;
        let res = evolve_with(&sw, &p, &cfg, None, |_, s| {
            modulus = modulus.max(rel(s.u1().values()[0].norm(), phi0));
        })
        .unwrap();
        let (de, dq) = (res.drift_e(), res.drift_q());
        c.that(
            res.outcome == Outcome::Completed,
            format!("dt={dt}: run completed"),
        );
        c.that(de <= 1e-4, format!("dt={dt}: E drift {de:.2e} (<= 1e-4)"));
        c.that(dq <= 1e-4, format!("dt={dt}: Q drift {dq:.2e} (<= 1e-4)"));
        if dt == 0.01 {
            c.that(
                modulus <= 1e-2,
                format!("dt={dt}: |u1(t,0)| vs phi1(0) {modulus:.2e} (<= 1e-2)"),
            );
        }
        drifts.push(de);
    }
    let ratio = drifts[0] / drifts[1];
    c.that(
        ratio >= 3.5,
        format!("halving dt reduces E drift by {ratio:.1}x (>= 3.5)"),
    );
}

fn criterion_7(c: &mut Check) {
    let p = resonant_2d();
    let gs = ground_state(&p, 20.0, 4096);
    let dyn_grid = grid(2, 60.0, 2048);
    let s0 = scale_state(&gs.standing_wave().resample(&dyn_grid), 1.05).unwrap();
    let cfg = EvolveConfig {
        dt: 0.005,
        t_end: 5.0,
        record_every: 10,
        ..Default::default()
    };
    let res = evolve(&s0, &p, &cfg, Some(50.0)).unwrap();
    let rep = check_virial_identity(&res, 20.0).unwrap();
    c.that(
        rep.pass && rep.max_rel_deviation <= 1e-2,
        format!(
            "max |-dI/dt - H|/max|H| = {:.2e} (<= 1e-2) over {} records up to t = {:.2} (run: {:?} at t = {:.3})",
            rep.max_rel_deviation, rep.points, rep.window_end, res.outcome, res.t_final
        ),
    );
}

fn criterion_8(c: &mut Check) {
    // Both criterion-3 sets have m2 = 2 m1; the third set covers the
    // non-resonant case.
    let non_resonant = Params::new(1.0, 2.3, 0.4, 3).unwrap();
    for p in [resonant_2d(), resonant_3d(), non_resonant] {
        let n = format!("{}, m2={}", p.dim, p.m2);
        let mut cfg = ExperimentConfig::new(p);
        cfg.lambda_list = vec![1.0, 1.05];
        let rep = run_instability(&cfg).unwrap();
        c.that(
            rep.sc1_satisfied && rep.sc2_satisfied,
            format!("N={n}: SC1 and SC2 hold"),
        );
        for e in &rep.entries {
            if e.lambda == 1.05 {
                c.that(e.in_b, format!("N={n} lambda=1.05: in B_omega"));
                c.that(
                    e.h_negative_at_all_records && e.p_omega_negative_at_all_records,
                    format!(
                        "N={n} lambda=1.05: H < 0 and P_omega < 0 at all {} records (max H {:.3e}, max P {:.3e})",
                        e.records_count, e.h_max, e.p_omega_max
                    ),
                );
                c.that(
                    e.outcome == Outcome::BlowupDetected && e.max_xnorm >= 1e4 * e.initial_xnorm,
                    format!(
                        "N={n} lambda=1.05: {:?} at t_final = {:.3} (X-norm ratio {:.2e})",
                        e.outcome,
                        e.t_final,
                        e.max_xnorm / e.initial_xnorm
                    ),
                );
                c.that(
                    e.reliable,
                    format!(
                        "N={n} lambda=1.05: resolved drift E {:.1e}, Q {:.1e}",
                        e.drift_e, e.drift_q
                    ),
                );
            } else {
                c.that(
                    e.outcome == Outcome::Completed && e.max_xnorm_deviation <= 0.1,
                    format!(
                        "N={n} lambda=1.0: {:?}, X-norm deviation {:.2e} (<= 0.1)",
                        e.outcome, e.max_xnorm_deviation
                    ),
                );
            }
        }
    }
}

fn criterion_9(c: &mut Check) {
    for p in [resonant_2d(), resonant_3d()] {
        let n = p.dim;
        let gs = ground_state(&p, 20.0, 4096);
        let sw = gs.standing_wave();
        let a = p.alpha();
        let e_ref = a * FunctionalReport::evaluate(&sw, &p).unwrap().energy;
        for lam in [1.05, 1.1, 1.5] {
            let s = scale_state(&sw, lam).unwrap();
            match check_key_proposition(&s, &gs) {
                Ok(r) => c.that(
                    r.pass,
                    format!(
                        "N={n} lambda={lam}: slack {:.4e} (>= {:.1e})",
                        r.slack,
                        -1e-6 * e_ref.abs()
                    ),
                ),
                Err(e) => c.that(false, format!("N={n} lambda={lam}: hypotheses failed: {e}")),
            }
            match check_vc3(&s.position(), &gs) {
                Ok(r) => c.that(
                    r.pass,
                    format!(
                        "N={n} lambda={lam}: M_omega gap {:.3e}, L gap {:.3e}",
                        r.m_omega_gap, r.l_gap
                    ),
                ),
                Err(e) => c.that(false, format!("N={n} lambda={lam}: {e}")),
            }
        }
    }
}

type Criterion = (&'static str, fn(&mut Check));

fn main() {
    let criteria: [Criterion; 9] = [
        ("functional identities", criterion_1),
        ("scaling identities", criterion_2),
        ("ground states", criterion_3),
        ("symmetric-parameter oracle", criterion_4),
        ("g-function", criterion_5),
        ("conservation in evolution", criterion_6),
        ("virial identity saturation", criterion_7),
        ("instability experiment", criterion_8),
        ("key proposition", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let mut c = Check::new();
        let caught = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&mut c)));
        if caught.is_err() {
            c.failures.push("panicked".into());
        }
        let ok = c.failures.is_empty();
        failed += usize::from(!ok);
        println!(
            "criterion {}: {} [{}] ({:.1} s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            t0.elapsed().as_secs_f64()
        );
        for f in &c.failures {
            println!("    FAIL  {f}");
        }
        for n in &c.notes {
            println!("    ok    {n}");
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

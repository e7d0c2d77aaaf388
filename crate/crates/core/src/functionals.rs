//! Conserved and variational functionals. Everything is assembled from one
//! set of quadrature sums, so the linear identities between them hold to rounding.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::field::{grad_norm_sq, inner_unchecked, l2_inner, norm_sq, Field, FieldPair, State};
use crate::params::Params;

/// Re of the quadrature of u1^2 conj(u2).
pub fn interaction_g(u1: &Field, u2: &Field) -> Result<f64> {
    l2_inner(u1, u2)?; // grid check
    Ok(g_unchecked(u1, u2))
}

fn g_unchecked(u1: &Field, u2: &Field) -> f64 {
    let w = u1.grid().weights();
    w.iter()
        .zip(u1.values().iter().zip(u2.values()))
        .map(|(w, (a, b))| w * (a * a * b.conj()).re)
        .sum()
}

/// Sums over the position pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSums {
    pub norm1: f64,
    pub norm2: f64,
    pub grad1: f64,
    pub grad2: f64,
    pub g: f64,
}

impl PositionSums {
    pub fn of(u: &FieldPair) -> Self {
        let (a, b) = (u.first(), u.second());
        PositionSums {
            norm1: norm_sq(a),
            norm2: norm_sq(b),
            grad1: grad_norm_sq(a),
            grad2: grad_norm_sq(b),
            g: g_unchecked(a, b),
        }
    }

    pub fn m(&self, p: &Params) -> f64 {
        0.5 * (p.m1 * p.m1 * self.norm1 + p.m2 * p.m2 * self.norm2)
    }

    pub fn l(&self) -> f64 {
        -0.5 * (self.grad1 + self.grad2) + self.g
    }

    pub fn m_omega(&self, p: &Params) -> f64 {
        0.5 * (p.mu1() * self.norm1 + p.mu2() * self.norm2)
    }

    pub fn suite(&self, p: &Params) -> VariationalSuite {
        let a = p.alpha();
        let m_omega = self.m_omega(p);
        let l = self.l();
        VariationalSuite {
            j_omega: m_omega - l,
            m_omega,
            k_omega: 2.0 * m_omega + self.grad1 + self.grad2 - 3.0 * self.g,
            p_omega: a * m_omega - (a + 2.0) * l,
        }
    }
}

/// Sums over a full state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSums {
    pub pos: PositionSums,
    pub vnorm1: f64,
    pub vnorm2: f64,
    /// (v1, i u1) and (v2, i u2).
    pub q1: f64,
    pub q2: f64,
}

impl StateSums {
    pub fn of(s: &State) -> Self {
        let i = Complex64::i();
        StateSums {
            pos: PositionSums::of(&s.position()),
            vnorm1: norm_sq(s.v1()),
            vnorm2: norm_sq(s.v2()),
            q1: inner_unchecked(s.v1(), &s.u1().scale(i)),
            q2: inner_unchecked(s.v2(), &s.u2().scale(i)),
        }
    }

    pub fn k(&self) -> f64 {
        0.5 * (self.vnorm1 + self.vnorm2)
    }

    pub fn q(&self) -> f64 {
        self.q1 + 2.0 * self.q2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationalSuite {
    pub j_omega: f64,
    pub m_omega: f64,
    pub k_omega: f64,
    pub p_omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kml {
    pub k: f64,
    pub m: f64,
    pub l: f64,
}

/// All scalar functionals of one state. Serializes to the flat key set used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "J_omega")]
    pub j_omega: f64,
    #[serde(rename = "M_omega")]
    pub m_omega: f64,
    #[serde(rename = "K_omega")]
    pub k_omega: f64,
    #[serde(rename = "P_omega")]
    pub p_omega: f64,
    #[serde(rename = "S_omega")]
    pub s_omega: f64,
    #[serde(skip)]
    pub params: Params,
}

impl FunctionalReport {
    pub fn evaluate(s: &State, p: &Params) -> Result<Self> {
        p.check_grid(s.grid())?;
        Ok(Self::from_sums(&StateSums::of(s), p))
    }

    pub fn from_sums(sums: &StateSums, p: &Params) -> Self {
        let a = p.alpha();
        let k = sums.k();
        let m = sums.pos.m(p);
        let l = sums.pos.l();
        let energy = k + m - l;
        let charge = sums.q();
        let suite = sums.pos.suite(p);
        FunctionalReport {
            energy,
            charge,
            g: sums.pos.g,
            k,
            m,
            l,
            h: -a * k + a * m - (a + 2.0) * l,
            j_omega: suite.j_omega,
            m_omega: suite.m_omega,
            k_omega: suite.k_omega,
            p_omega: suite.p_omega,
            s_omega: energy - p.omega * charge,
            params: *p,
        }
    }
}

pub fn charge_q(s: &State) -> f64 {
    let i = Complex64::i();
    inner_unchecked(s.v1(), &s.u1().scale(i)) + 2.0 * inner_unchecked(s.v2(), &s.u2().scale(i))
}

pub fn energy_e(s: &State, p: &Params) -> f64 {
    FunctionalReport::from_sums(&StateSums::of(s), p).energy
}

pub fn kml(s: &State, p: &Params) -> Kml {
    let r = FunctionalReport::from_sums(&StateSums::of(s), p);
    Kml {
        k: r.k,
        m: r.m,
        l: r.l,
    }
}

pub fn dilation_h(s: &State, p: &Params) -> f64 {
    FunctionalReport::from_sums(&StateSums::of(s), p).h
}

pub fn variational_suite(u: &FieldPair, p: &Params) -> VariationalSuite {
    PositionSums::of(u).suite(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Action {
    pub s_omega: f64,
    /// J_w(u) + |v1 - i w u1|^2/2 + |v2 - 2 i w u2|^2/2, from its own quadrature pass.
    pub decomposition: f64,
}

pub fn action_s(s: &State, p: &Params) -> Action {
    let sums = StateSums::of(s);
    let report = FunctionalReport::from_sums(&sums, p);
    let w = p.omega;
    let d1 = residual_velocity(s.v1(), s.u1(), w);
    let d2 = residual_velocity(s.v2(), s.u2(), 2.0 * w);
    Action {
        s_omega: report.s_omega,
        decomposition: report.j_omega + 0.5 * (norm_sq(&d1) + norm_sq(&d2)),
    }
}

fn residual_velocity(v: &Field, u: &Field, freq: f64) -> Field {
    let c = Complex64::new(0.0, freq);
    let values = v
        .values()
        .iter()
        .zip(u.values())
        .map(|(&a, &b)| a - c * b)
        .collect();
    Field::from_values(v.grid(), values).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::scale_state;
    use crate::grid::RadialGrid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup() -> (Arc<RadialGrid>, Field) {
        let g = Arc::new(RadialGrid::new(2, 20.0, 4096).unwrap());
        let f = Field::from_real_fn(&g, |r| (-r * r).exp());
        (g, f)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn interaction_examples() {
        let (g, f) = setup();
        assert_eq!(interaction_g(&f, &Field::zeros(&g)).unwrap(), 0.0);
        assert!(rel(interaction_g(&f, &f).unwrap(), PI / 3.0) < 1e-5);
        assert!(interaction_g(&f, &f.scale(Complex64::i())).unwrap().abs() < 1e-15);
    }

    #[test]
    fn charge_examples() {
        let (g, f) = setup();
        let z = Field::zeros(&g);
        let s = State::new(f.clone(), f.clone(), z.clone(), z.clone()).unwrap();
        assert_eq!(charge_q(&s), 0.0);
        let w = 0.3;
        let u2 = f.scale(Complex64::new(0.7, 0.0));
        let s = State::new(
            f.clone(),
            u2.clone(),
            f.scale(Complex64::new(0.0, w)),
            u2.scale(Complex64::new(0.0, 2.0 * w)),
        )
        .unwrap();
        let expect = w * norm_sq(&f) + 4.0 * w * norm_sq(&u2);
        assert!(rel(charge_q(&s), expect) < 1e-10);
        let s = State::new(f.clone(), z.clone(), f.scale(Complex64::i()), z).unwrap();
        assert!((charge_q(&s) - PI / 2.0).abs() < 1e-5);
    }

    #[test]
    fn gaussian_energy_and_kml() {
        let (g, f) = setup();
        let p = Params::new(1.0, 2.5, 0.0, 2).unwrap();
        let p11 = Params { m2: 1.0, ..p };
        let z = Field::zeros(&g);
        let s = State::new(f.clone(), f.clone(), z.clone(), z.clone()).unwrap();
        assert!(rel(energy_e(&s, &p11), 7.0 * PI / 6.0) < 1e-4);
        let kml = kml(&s, &p11);
        assert_eq!(kml.k, 0.0);
        assert!(rel(kml.m, PI / 2.0) < 1e-4);
        assert!(rel(kml.l, -2.0 * PI / 3.0) < 1e-4);
        let s = State::new(z.clone(), z.clone(), f, z.clone()).unwrap();
        assert!((super::kml(&s, &p).k - PI / 4.0).abs() < 1e-5);
        let zs = State::zeros(&g);
        assert_eq!(energy_e(&zs, &p), 0.0);
        assert_eq!(dilation_h(&zs, &p), 0.0);
    }

    #[test]
    fn h_is_scaling_derivative() {
        let (g, f) = setup();
        let p = Params::new(1.0, 2.0, 0.5, 2).unwrap();
        let u2 = Field::from_real_fn(&g, |r| 0.8 * (-1.3 * r * r).exp());
        let s = State::new(
            f.scale(Complex64::new(1.5, 0.0)),
            u2.clone(),
            f.scale(Complex64::new(0.2, 0.9)),
            u2.scale(Complex64::new(0.0, 0.4)),
        )
        .unwrap();
        let eps = 1e-4;
        let ep = energy_e(&scale_state(&s, 1.0 + eps).unwrap(), &p);
        let em = energy_e(&scale_state(&s, 1.0 - eps).unwrap(), &p);
        let fd = (ep - em) / (2.0 * eps);
        assert!(rel(fd, dilation_h(&s, &p)) < 1e-5);
    }

    #[test]
    fn action_reduces_to_energy_without_frequency() {
        let (g, f) = setup();
        let p = Params::new(1.0, 2.0, 0.0, 2).unwrap();
        let s = State::new(
            f.clone(),
            f.clone(),
            f.scale(Complex64::i()),
            Field::zeros(&g),
        )
        .unwrap();
        assert_eq!(action_s(&s, &p).s_omega, energy_e(&s, &p));
    }

    #[test]
    fn report_serializes_exact_keys() {
        let (g, _) = setup();
        let p = Params::new(1.0, 2.0, 0.5, 2).unwrap();
        let r = FunctionalReport::evaluate(&State::zeros(&g), &p).unwrap();
        let v = serde_json::to_value(r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut want = vec![
            "E", "Q", "G", "K", "M", "L", "H", "J_omega", "M_omega", "K_omega", "P_omega",
            "S_omega",
        ];
        want.sort();
        assert_eq!(keys, want);
    }
}

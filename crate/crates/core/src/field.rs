use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Complex radial profile sampled on a grid. The sample at r = R is held at zero.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.values == other.values
    }
}

pub(crate) fn same_grid(a: &Arc<RadialGrid>, b: &Arc<RadialGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check(a: &Field, b: &Field) -> Result<()> {
    if same_grid(&a.grid, &b.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl Field {
    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.npts()],
        }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::from_values(grid, values).expect("length matches by construction")
    }

    pub fn from_real_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    /// Takes ownership of nodal samples; the last sample is pinned to zero.
    pub fn from_values(grid: &Arc<RadialGrid>, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.npts() {
            return Err(Error::Domain(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                grid.npts()
            )));
        }
        *values.last_mut().unwrap() = Complex64::new(0.0, 0.0);
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        let values = self.values.iter().map(|&z| f(z)).collect();
        Field::from_values(&self.grid, values).unwrap()
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Cubic (four-point Lagrange) interpolation at radius x >= 0, zero beyond R.
    pub fn sample(&self, x: f64) -> Complex64 {
        let g = &*self.grid;
        if x >= g.rmax() {
            return Complex64::new(0.0, 0.0);
        }
        let s = x / g.h();
        let j = (s.floor() as usize).min(g.npts() - 2);
        let t = s - j as f64;
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            acc += self.reflected(j as isize + k as isize - 1) * *wk;
        }
        acc
    }

    fn reflected(&self, idx: isize) -> Complex64 {
        let last = self.values.len() as isize - 1;
        if idx < 0 {
            self.values[(-idx) as usize]
        } else if idx > last {
            -self.values[(2 * last - idx) as usize]
        } else {
            self.values[idx as usize]
        }
    }

    /// Samples this profile onto another grid (cubic interpolation, zero extension).
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> Field {
        Field::from_fn(grid, |r| self.sample(r))
    }

    /// Fourth-order radial derivative at the nodes.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        self.grid.derivative_matrix().apply(&self.values, &mut out);
        out
    }
}

/// Re of the quadrature of f conj(g) over R^N.
pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    check(f, g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &Field, g: &Field) -> f64 {
    inner_slices(f.grid.weights(), &f.values, &g.values)
}

pub(crate) fn inner_slices(w: &[f64], f: &[Complex64], g: &[Complex64]) -> f64 {
    w.iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| w * (a.re * b.re + a.im * b.im))
        .sum()
}

pub(crate) fn norm_sq_slice(w: &[f64], f: &[Complex64]) -> f64 {
    w.iter().zip(f).map(|(w, a)| w * a.norm_sqr()).sum()
}

pub fn norm_sq(f: &Field) -> f64 {
    norm_sq_slice(f.grid.weights(), &f.values)
}

/// Radial Laplacian f'' + (N-1)/r f' (N f''(0) at the origin).
pub fn laplacian(f: &Field) -> Field {
    let mut out = vec![Complex64::new(0.0, 0.0); f.values.len()];
    f.grid.laplacian_matrix().apply(&f.values, &mut out);
    // The boundary row is returned as computed; only stored fields pin it.
    Field {
        grid: f.grid.clone(),
        values: out,
    }
}

/// ||f||^2 + ||f'||^2.
pub fn grad_norm_sq(f: &Field) -> f64 {
    norm_sq_slice(f.grid.weights(), &f.radial_derivative())
}

pub fn h1_norm_sq(f: &Field) -> f64 {
    norm_sq(f) + grad_norm_sq(f)
}

/// Two profiles on one grid, e.g. the position part (u1, u2) of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    first: Field,
    second: Field,
}

impl FieldPair {
    pub fn new(first: Field, second: Field) -> Result<Self> {
        check(&first, &second)?;
        Ok(FieldPair { first, second })
    }
    pub fn first(&self) -> &Field {
        &self.first
    }
    pub fn second(&self) -> &Field {
        &self.second
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.first.grid
    }
    pub fn into_parts(self) -> (Field, Field) {
        (self.first, self.second)
    }

    /// u^lambda(x) = lambda^2 u(lambda x).
    pub fn scaled(&self, lambda: f64) -> Result<FieldPair> {
        check_lambda(lambda)?;
        Ok(FieldPair {
            first: dilate(&self.first, lambda, lambda * lambda),
            second: dilate(&self.second, lambda, lambda * lambda),
        })
    }

    /// Amplitude scaling c u.
    pub fn amplified(&self, c: f64) -> FieldPair {
        let c = Complex64::new(c, 0.0);
        FieldPair {
            first: self.first.scale(c),
            second: self.second.scale(c),
        }
    }
}

/// A point (u, v) of the energy space: four profiles on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    u1: Field,
    u2: Field,
    v1: Field,
    v2: Field,
}

impl State {
    pub fn new(u1: Field, u2: Field, v1: Field, v2: Field) -> Result<Self> {
        check(&u1, &u2)?;
        check(&u1, &v1)?;
        check(&u1, &v2)?;
        Ok(State { u1, u2, v1, v2 })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        let z = Field::zeros(grid);
        State {
            u1: z.clone(),
            u2: z.clone(),
            v1: z.clone(),
            v2: z,
        }
    }

    pub fn from_pairs(u: FieldPair, v: FieldPair) -> Result<Self> {
        let (u1, u2) = u.into_parts();
        let (v1, v2) = v.into_parts();
        State::new(u1, u2, v1, v2)
    }

    pub fn u1(&self) -> &Field {
        &self.u1
    }
    pub fn u2(&self) -> &Field {
        &self.u2
    }
    pub fn v1(&self) -> &Field {
        &self.v1
    }
    pub fn v2(&self) -> &Field {
        &self.v2
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.u1.grid
    }

    pub fn position(&self) -> FieldPair {
        FieldPair {
            first: self.u1.clone(),
            second: self.u2.clone(),
        }
    }

    pub fn velocity(&self) -> FieldPair {
        FieldPair {
            first: self.v1.clone(),
            second: self.v2.clone(),
        }
    }

    pub fn fields(&self) -> [&Field; 4] {
        [&self.u1, &self.u2, &self.v1, &self.v2]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    /// sqrt(||u1||_{H1}^2 + ||u2||_{H1}^2 + ||v1||^2 + ||v2||^2).
    pub fn xnorm(&self) -> f64 {
        (h1_norm_sq(&self.u1) + h1_norm_sq(&self.u2) + norm_sq(&self.v1) + norm_sq(&self.v2)).sqrt()
    }

    /// Same state sampled on another grid.
    pub fn resample(&self, grid: &Arc<RadialGrid>) -> State {
        State {
            u1: self.u1.resample(grid),
            u2: self.u2.resample(grid),
            v1: self.v1.resample(grid),
            v2: self.v2.resample(grid),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "scaling factor must be positive, got {lambda}"
        )))
    }
}

fn dilate(f: &Field, lambda: f64, amplitude: f64) -> Field {
    if lambda == 1.0 && amplitude == 1.0 {
        return f.clone();
    }
    let values = f
        .grid
        .nodes()
        .iter()
        .map(|&r| f.sample(lambda * r) * amplitude)
        .collect();
    Field::from_values(&f.grid, values).unwrap()
}

/// (u^lambda, v_lambda) with u^lambda = lambda^2 u(lambda .) and v_lambda = lambda^{N-2} v(lambda .).
pub fn scale_state(s: &State, lambda: f64) -> Result<State> {
    check_lambda(lambda)?;
    let n = s.grid().dim() as i32;
    let au = lambda * lambda;
    let av = lambda.powi(n - 2);
    Ok(State {
        u1: dilate(&s.u1, lambda, au),
        u2: dilate(&s.u2, lambda, au),
        v1: dilate(&s.v1, lambda, av),
        v2: dilate(&s.v2, lambda, av),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(dim: usize, r: f64, m: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(dim, r, m).unwrap())
    }

    fn gauss(g: &Arc<RadialGrid>) -> Field {
        Field::from_real_fn(g, |r| (-r * r).exp())
    }

    #[test]
    fn l2_inner_examples() {
        let g = grid(2, 20.0, 4096);
        let z = Field::zeros(&g);
        assert_eq!(l2_inner(&z, &z).unwrap(), 0.0);
        let f = gauss(&g);
        assert!((l2_inner(&f, &f).unwrap() - PI / 2.0).abs() < 1e-6);
        let fi = f.scale(Complex64::i());
        assert!(l2_inner(&f, &fi).unwrap().abs() < 1e-15);
        let other = gauss(&grid(2, 20.0, 2048));
        assert!(matches!(l2_inner(&f, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn laplacian_constant_vanishes_inside() {
        for dim in [2, 3] {
            let g = grid(dim, 10.0, 256);
            let f = Field::from_real_fn(&g, |_| 3.0);
            // from_values pins the last node, so the last two rows see the jump.
            let l = laplacian(&f);
            for v in &l.values()[..g.npts() - 3] {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_bessel_eigenfunction() {
        let rr = 20.0;
        let k = PI / rr;
        let g = grid(3, rr, 2048);
        let j0 = |r: f64| {
            if r == 0.0 {
                1.0
            } else {
                (k * r).sin() / (k * r)
            }
        };
        let f = Field::from_real_fn(&g, j0);
        let l = laplacian(&f);
        let scale = k * k;
        // The odd reflection at R is exact for r*f, not f, so the two nodes
        // next to the boundary carry a local O(h) error.
        for (i, &r) in g.nodes().iter().enumerate().take(g.npts() - 3) {
            let err = (l.values()[i].re + scale * j0(r)).abs();
            assert!(
                err <= 1e-3 * scale * j0(r).abs().max(1e-3),
                "node {i}: {err}"
            );
        }
    }

    #[test]
    fn laplacian_gaussian_2d() {
        let g = grid(2, 15.0, 2048);
        let f = gauss(&g);
        let l = laplacian(&f);
        for (i, &r) in g.nodes().iter().enumerate().take(g.npts() - 1) {
            let exact = (4.0 * r * r - 4.0) * (-r * r).exp();
            if exact.abs() > 1e-12 {
                assert!(
                    (l.values()[i].re - exact).abs() <= 1e-3 * exact.abs(),
                    "node {i}"
                );
            }
        }
    }

    #[test]
    fn h1_gaussian() {
        let g = grid(2, 20.0, 4096);
        let f = gauss(&g);
        let v = h1_norm_sq(&f);
        assert!((v / (1.5 * PI) - 1.0).abs() < 1e-4);
        let fi = f.scale(Complex64::i());
        assert_eq!(h1_norm_sq(&fi), v);
        assert_eq!(h1_norm_sq(&Field::zeros(&g)), 0.0);
    }

    #[test]
    fn laplacian_is_symmetric_for_supported_pairs() {
        for dim in [2, 3] {
            let g = grid(dim, 20.0, 4096);
            let f = Field::from_real_fn(&g, |r| (-(r - 3.0).powi(2)).exp());
            let h = Field::from_real_fn(&g, |r| (-0.5 * r * r).exp() * (1.0 + r));
            let a = inner_unchecked(&laplacian(&f), &h);
            let b = inner_unchecked(&f, &laplacian(&h));
            let tol = 1e-6 * norm_sq(&f).sqrt() * norm_sq(&h).sqrt();
            assert!((a - b).abs() <= tol, "N={dim}: {a} vs {b}");
        }
    }

    #[test]
    fn interpolation_reproduces_cubics_and_nodes() {
        let g = grid(3, 10.0, 101);
        let f = Field::from_real_fn(&g, |r| 1.0 + r * r - 0.01 * r * r * r);
        assert_eq!(f.sample(g.nodes()[17]), f.values()[17]);
        for x in [0.333, 1.7, 5.55] {
            let exact = 1.0 + x * x - 0.01 * x * x * x;
            assert!((f.sample(x).re - exact).abs() < 1e-11);
        }
        assert_eq!(f.sample(10.5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn scale_identity_is_bitwise() {
        let g = grid(2, 20.0, 512);
        let f = gauss(&g);
        let s = State::new(f.clone(), f.clone(), f.scale(Complex64::i()), f).unwrap();
        assert_eq!(scale_state(&s, 1.0).unwrap(), s);
        assert!(scale_state(&s, 0.0).is_err());
        assert!(scale_state(&s, -1.0).is_err());
    }
}

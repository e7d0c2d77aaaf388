//! Five-diagonal real matrices: application to real/complex vectors and an
//! unpivoted LU for the (diagonally dominant) Helmholtz operators.

use num_complex::Complex64;
use std::ops::{Add, Mul};

/// `band[k][i]` multiplies `x[i + k - 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded5 {
    n: usize,
    band: [Vec<f64>; 5],
}

pub trait Scalar: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

impl Banded5 {
    pub fn zeros(n: usize) -> Self {
        Banded5 {
            n,
            band: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `c` at (row, col); |col - row| must be at most 2.
    pub fn add(&mut self, row: usize, col: usize, c: f64) {
        let k = col as isize - row as isize + 2;
        assert!((0..5).contains(&k), "entry ({row},{col}) outside the band");
        self.band[k as usize][row] += c;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let k = col as isize - row as isize + 2;
        if (0..5).contains(&k) {
            self.band[k as usize][row]
        } else {
            0.0
        }
    }

    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        let n = self.n;
        debug_assert!(x.len() >= n && y.len() >= n);
        for i in 0..n {
            let mut acc = T::zero();
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            for j in lo..=hi {
                acc = acc + x[j] * self.band[j + 2 - i][i];
            }
            y[i] = acc;
        }
    }

    /// Leading `m` x `m` block, scaled by `scale`, plus `shift` on the diagonal.
    pub fn leading_block(&self, m: usize, scale: f64, shift: f64) -> Banded5 {
        let mut out = Banded5::zeros(m);
        for i in 0..m {
            for k in 0..5 {
                let j = i as isize + k as isize - 2;
                if j >= 0 && (j as usize) < m {
                    out.band[k][i] = scale * self.band[k][i];
                }
            }
            out.band[2][i] += shift;
        }
        out
    }

    pub fn lu(&self) -> BandedLu {
        let n = self.n;
        let mut a = self.band.clone();
        for k in 0..n {
            let pivot = a[2][k];
            assert!(pivot != 0.0 && pivot.is_finite(), "zero pivot in banded LU");
            for i in (k + 1)..=(k + 2).min(n - 1) {
                let kk = k + 2 - i; // band index of (i, k)
                let m = a[kk][i] / pivot;
                a[kk][i] = m;
                for j in (k + 1)..=(k + 2).min(n - 1) {
                    a[j + 2 - i][i] -= m * a[j + 2 - k][k];
                }
            }
        }
        BandedLu { n, a }
    }
}

/// Unit-lower L and upper U stored in the original band slots.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    a: [Vec<f64>; 5],
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(2)..i {
                s -= self.a[j + 2 - i][i] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..=(i + 2).min(n - 1) {
                s -= self.a[j + 2 - i][i] * b[j];
            }
            b[i] = s / self.a[2][i];
        }
    }
}

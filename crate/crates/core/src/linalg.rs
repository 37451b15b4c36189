//! Small dense LU factorisation. Sizes here are at most a handful of rows.

use alloc::vec;
use alloc::vec::Vec;

const PIVOT_RTOL: f64 = 1e-13;

/// Row-major square LU factors with partial pivoting.
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorises `a` (row-major `n x n`). Returns `None` when numerically singular.
    pub(crate) fn new(a: &[f64], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(libm::fabs(*v)));
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        for col in 0..n {
            let mut piv = col;
            let mut best = libm::fabs(lu[col * n + col]);
            for row in col + 1..n {
                let v = libm::fabs(lu[row * n + col]);
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best <= PIVOT_RTOL * scale {
                return None;
            }
            if piv != col {
                for c in 0..n {
                    lu.swap(col * n + c, piv * n + c);
                }
                perm.swap(col, piv);
            }
            let d = lu[col * n + col];
            for row in col + 1..n {
                let f = lu[row * n + col] / d;
                lu[row * n + col] = f;
                for c in col + 1..n {
                    lu[row * n + c] -= f * lu[col * n + c];
                }
            }
        }
        Some(Lu { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A' x = b`.
    pub(crate) fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // A = P' L U  =>  A' = U' L' P
        let mut w = b.to_vec();
        for i in 0..n {
            let mut s = w[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * w[j];
            }
            w[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

//! Exact single-output quantile regression.
//!
//! Minimises `Σ ρ_τ(y_i - x_i'β)` by a vertex-to-vertex descent: every iterate
//! fits exactly `p` observations (the basis). At each vertex the directional
//! derivatives along the `2p` edges that release one basic observation are
//! evaluated; the steepest descending edge is followed with an exact
//! piecewise-linear line search that may pass several breakpoints at once
//! (the Barrodale-Roberts step). The method stops when no edge descends,
//! which is equivalent to every dual weight lying in `[τ-1, τ]`.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::linalg::{dot, Lu};
use crate::{Error, Result};

/// Tolerance used to declare `n·τ` an integer.
pub const TAU_INTEGER_TOL: f64 = 1e-9;

/// Check loss `ρ_τ(r) = r (τ - 1[r < 0])`.
pub fn check_loss(tau: f64, r: f64) -> Result<f64> {
    validate_tau(tau)?;
    Ok(rho(tau, r))
}

#[inline]
pub(crate) fn rho(tau: f64, r: f64) -> f64 {
    if r < 0.0 {
        (tau - 1.0) * r
    } else {
        tau * r
    }
}

pub(crate) fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::TauOutOfRange { tau })
    }
}

/// Whether `n·τ` is within [`TAU_INTEGER_TOL`] of an integer.
pub fn is_degenerate_tau(n: usize, tau: f64) -> bool {
    let nt = n as f64 * tau;
    libm::fabs(nt - libm::round(nt)) < TAU_INTEGER_TOL
}

/// Rejects τ outside (0, 1) and orders with `n·τ` integral.
pub fn check_tau(n: usize, tau: f64) -> Result<()> {
    validate_tau(tau)?;
    if is_degenerate_tau(n, tau) {
        return Err(Error::DegenerateTau { tau, n });
    }
    Ok(())
}

/// A quantile regression problem; the first design column must be all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct QrProblem {
    y: Vec<f64>,
    x: Vec<f64>,
    p: usize,
    tau: f64,
}

impl QrProblem {
    /// `x` is row-major `n x p`.
    pub fn new(y: Vec<f64>, x: Vec<f64>, p: usize, tau: f64) -> Result<Self> {
        validate_tau(tau)?;
        let n = y.len();
        if p == 0 {
            return Err(Error::DimensionTooSmall { k: 0 });
        }
        if x.len() != n * p {
            return Err(Error::DimensionMismatch { expected: n * p, found: x.len() });
        }
        if n <= p {
            return Err(Error::InvalidInput("need more observations than parameters"));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in quantile regression data"));
        }
        if x.chunks_exact(p).any(|row| row[0] != 1.0) {
            return Err(Error::InvalidInput("first design column must be the intercept"));
        }
        Ok(QrProblem { y, x, p, tau })
    }

    /// Intercept-only problem.
    pub fn intercept_only(y: Vec<f64>, tau: f64) -> Result<Self> {
        let n = y.len();
        Self::new(y, vec![1.0; n], 1, tau)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of coefficients.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Quantile order.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Responses.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Design row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

/// Optimal vertex of a [`QrProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct QrSolution {
    /// Coefficients.
    pub beta: Vec<f64>,
    /// Exactly fitted observations, ascending.
    pub fitted: Vec<usize>,
    /// `y_i - x_i'β`; exactly zero on `fitted`.
    pub residuals: Vec<f64>,
    /// `Σ ρ_τ(r_i)`.
    pub objective: f64,
    /// Dual weight of each fitted observation (aligned with `fitted`).
    pub dual_weights: Vec<f64>,
    /// Number of vertex pivots performed.
    pub pivots: usize,
}

impl QrSolution {
    /// `N⁻`: observations with negative residual.
    pub fn n_negative(&self) -> usize {
        self.residuals.iter().filter(|r| **r < 0.0).count()
    }

    /// Observations with positive residual.
    pub fn n_positive(&self) -> usize {
        self.residuals.iter().filter(|r| **r > 0.0).count()
    }

    /// Subgradient weight of every observation: `τ`, `τ-1` or the dual weight.
    pub fn psi(&self, tau: f64) -> Vec<f64> {
        let mut psi: Vec<f64> = self.residuals.iter().map(|&r| if r > 0.0 { tau } else { tau - 1.0 }).collect();
        for (i, v) in self.fitted.iter().zip(&self.dual_weights) {
            psi[*i] = *v;
        }
        psi
    }
}

const ZERO_RESIDUAL_RTOL: f64 = 1e-11;
const SLOPE_TOL: f64 = 1e-11;

/// Solves the problem exactly; see the module docs for the method.
pub fn solve_qr(prob: &QrProblem) -> Result<QrSolution> {
    let n = prob.n();
    let p = prob.p;
    let tau = prob.tau;
    check_tau(n, tau)?;

    let scale = prob.y.iter().fold(1.0_f64, |m, v| m.max(libm::fabs(*v)));
    let zero_tol = ZERO_RESIDUAL_RTOL * scale;
    let mut basis = initial_basis(prob)?;
    let limit = 50 * n + 1000;
    let mut pivots = 0;

    let mut r = vec![0.0; n];
    let mut state = vec![0i8; n]; // +1/-1 sign, 0 tie, 2 basic
    let mut xd = vec![0.0; n * p];
    loop {
        let a: Vec<f64> = basis.iter().flat_map(|&i| prob.row(i).iter().copied()).collect();
        let lu = Lu::new(&a, p).ok_or_else(|| Error::DegenerateDesign { indices: sorted(&basis) })?;
        let yb: Vec<f64> = basis.iter().map(|&i| prob.y[i]).collect();
        let beta = lu.solve(&yb);

        let mut in_basis = vec![false; n];
        for &i in &basis {
            in_basis[i] = true;
        }
        let mut ties = Vec::new();
        let mut s = vec![0.0; p];
        for i in 0..n {
            if in_basis[i] {
                r[i] = 0.0;
                state[i] = 2;
                continue;
            }
            let ri = prob.y[i] - dot(prob.row(i), &beta);
            r[i] = ri;
            if libm::fabs(ri) <= zero_tol {
                state[i] = 0;
                ties.push(i);
            } else {
                let sign = if ri > 0.0 { 1 } else { -1 };
                state[i] = sign;
                let psi = if sign > 0 { tau } else { tau - 1.0 };
                for (sk, xk) in s.iter_mut().zip(prob.row(i)) {
                    *sk += psi * xk;
                }
            }
        }

        // column j of A^{-1} moves observation basis[j] off the fit at unit rate
        let dirs: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                let mut e = vec![0.0; p];
                e[j] = 1.0;
                lu.solve(&e)
            })
            .collect();
        for i in 0..n {
            for (j, d) in dirs.iter().enumerate() {
                xd[i * p + j] = dot(prob.row(i), d);
            }
        }

        let mut best: Option<(f64, usize, f64)> = None;
        for (j, d) in dirs.iter().enumerate() {
            let sd = dot(&s, d);
            for delta in [1.0, -1.0] {
                let mut g = -delta * sd + if delta > 0.0 { 1.0 - tau } else { tau };
                for &i in &ties {
                    let w = delta * xd[i * p + j];
                    g += if w > 0.0 { (1.0 - tau) * w } else { -tau * w };
                }
                if g < -SLOPE_TOL && best.is_none_or(|(bg, _, _)| g < bg) {
                    best = Some((g, j, delta));
                }
            }
        }

        let Some((g, j, delta)) = best else {
            let objective: f64 = r.iter().map(|&ri| rho(tau, ri)).sum();
            let dual = if ties.is_empty() {
                let v = lu.solve_transpose(&s);
                v.into_iter().map(|x| -x).collect()
            } else if objective <= zero_tol {
                // exact fit of every observation: zero weights certify optimality
                vec![0.0; p]
            } else {
                let mut idx = basis.clone();
                idx.extend(&ties);
                return Err(Error::DegenerateDesign { indices: sorted(&idx) });
            };
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by_key(|&k| basis[k]);
            return Ok(QrSolution {
                beta,
                fitted: order.iter().map(|&k| basis[k]).collect(),
                residuals: r,
                objective,
                dual_weights: order.iter().map(|&k| dual[k]).collect(),
                pivots,
            });
        };

        // exact line search along the chosen edge
        let mut crossings: Vec<(f64, f64, usize)> = Vec::new();
        for i in 0..n {
            if state[i] == 1 || state[i] == -1 {
                let w = delta * xd[i * p + j];
                if w != 0.0 && (w > 0.0) == (r[i] > 0.0) {
                    crossings.push((r[i] / w, libm::fabs(w), i));
                }
            }
        }
        crossings.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.2.cmp(&b.2)));
        let mut slope = g;
        let mut entering = None;
        for &(_, w, i) in &crossings {
            slope += w;
            if slope >= 0.0 {
                entering = Some(i);
                break;
            }
        }
        let Some(i) = entering else {
            return Err(Error::NoConvergence { pivots });
        };
        basis[j] = i;
        pivots += 1;
        if pivots > limit {
            return Err(Error::NoConvergence { pivots });
        }
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Rows with the smallest least-squares residuals that are linearly independent.
fn initial_basis(prob: &QrProblem) -> Result<Vec<usize>> {
    let n = prob.n();
    let p = prob.p;
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = prob.row(i);
        for a in 0..p {
            xty[a] += row[a] * prob.y[i];
            for b in 0..p {
                xtx[a * p + b] += row[a] * row[b];
            }
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let lu = Lu::new(&xtx, p).ok_or(Error::DegenerateDesign { indices: all })?;
    let beta = lu.solve(&xty);
    let mut order: Vec<(f64, usize)> = (0..n).map(|i| (libm::fabs(prob.y[i] - dot(prob.row(i), &beta)), i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

    let mut basis = Vec::with_capacity(p);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (_, i) in order {
        let row = prob.row(i);
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &ortho {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let len = libm::sqrt(dot(&v, &v));
        if len > 1e-8 * libm::sqrt(dot(row, row)) {
            v.iter_mut().for_each(|x| *x /= len);
            ortho.push(v);
            basis.push(i);
            if basis.len() == p {
                return Ok(basis);
            }
        }
    }
    Err(Error::DegenerateDesign { indices: basis })
}

/// Recomputes the dual weights of a solution from its fitted block:
/// the unique `v` with `Σ_{i∉h} ψ_i x_i + Σ_{i∈h} v_i x_i = 0`.
pub fn dual_weights(sol: &QrSolution, prob: &QrProblem) -> Result<Vec<f64>> {
    let p = prob.p;
    let tau = prob.tau;
    if sol.fitted.len() != p || sol.residuals.len() != prob.n() {
        return Err(Error::DimensionMismatch { expected: p, found: sol.fitted.len() });
    }
    let mut fitted = vec![false; prob.n()];
    for &i in &sol.fitted {
        fitted[i] = true;
    }
    let mut s = vec![0.0; p];
    let mut exact_fit = true;
    for (i, &r) in sol.residuals.iter().enumerate() {
        if fitted[i] {
            continue;
        }
        if r != 0.0 {
            exact_fit = false;
        }
        let psi = if r > 0.0 {
            tau
        } else if r < 0.0 {
            tau - 1.0
        } else {
            0.0
        };
        for (sk, xk) in s.iter_mut().zip(prob.row(i)) {
            *sk += psi * xk;
        }
    }
    if exact_fit {
        return Ok(vec![0.0; p]);
    }
    let a: Vec<f64> = sol.fitted.iter().flat_map(|&i| prob.row(i).iter().copied()).collect();
    let lu = Lu::new(&a, p).ok_or(Error::SingularFittedBlock)?;
    Ok(lu.solve_transpose(&s).into_iter().map(|x| -x).collect())
}

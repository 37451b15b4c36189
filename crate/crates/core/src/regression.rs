//! Multiple-output regression quantiles with directions in the response space.
//!
//! The τu regression quantile minimises `Σ ρ_τ(b'y_i - c'x_i - a)` subject to
//! `b'u = 1`. It is fitted exactly like the location case with the regressors
//! appended to the design, so with no regressors the two coincide bit for bit.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::cloud::fingerprint;
use crate::directional::{fit_directional, Counts};
use crate::geometry::{equispaced_directions, intersect_halfplanes_2d, ConvexRegion2D, Direction, Hyperplane};
use crate::linalg::dot;
use crate::qr::check_tau;
use crate::{Error, Result};

/// Default size of the response-direction grid used for cuts.
pub const DEFAULT_GRID: usize = 360;

/// Smallest bin size accepted by [`coverage_diagnostic`].
pub const MIN_BIN_COUNT: usize = 5;

/// Regressors, responses, order and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    x: Vec<f64>,
    q: usize,
    y: Vec<f64>,
    k: usize,
    tau: f64,
    u: Direction,
}

impl RegressionProblem {
    /// `x` is row-major `n x q` (no intercept column), `y` row-major `n x k`.
    pub fn new(x: Vec<f64>, q: usize, y: Vec<f64>, k: usize, tau: f64, u: Direction) -> Result<Self> {
        if k == 0 || !y.len().is_multiple_of(k) {
            return Err(Error::InvalidInput("response length is not a multiple of k"));
        }
        let n = y.len() / k;
        if x.len() != n * q {
            return Err(Error::DimensionMismatch { expected: n * q, found: x.len() });
        }
        if u.dim() != k {
            return Err(Error::DimensionMismatch { expected: k, found: u.dim() });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value"));
        }
        if n <= k + q {
            return Err(Error::InvalidInput("need more observations than fitted parameters"));
        }
        check_tau(n, tau)?;
        Ok(RegressionProblem { x, q, y, k, tau, u })
    }

    /// Same data with another direction.
    pub fn with_direction(&self, u: Direction) -> Result<Self> {
        if u.dim() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: u.dim() });
        }
        Ok(RegressionProblem { u, ..self.clone() })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len() / self.k
    }

    /// Number of regressors excluding the intercept (`p - 1`).
    pub fn n_regressors(&self) -> usize {
        self.q
    }

    /// Response dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Order τ.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Response direction.
    pub fn direction(&self) -> &Direction {
        &self.u
    }

    /// Regressors of observation `i`.
    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    /// Response of observation `i`.
    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.k..(i + 1) * self.k]
    }

    /// Hash of `(τ, X, Y)` used to detect mixed model collections.
    pub fn fingerprint(&self) -> u64 {
        fingerprint(fingerprint(self.tau.to_bits() ^ self.q as u64, &self.x), &self.y)
    }
}

/// Fitted τu regression quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionQuantile {
    /// Order τ.
    pub tau: f64,
    /// Response direction.
    pub u: Direction,
    /// Intercept.
    pub a: f64,
    /// Response weights, `b'u = 1`.
    pub b: Vec<f64>,
    /// Regressor coefficients.
    pub c: Vec<f64>,
    /// Lagrange multiplier of `b'u = 1`.
    pub lambda: f64,
    /// Minimal sum of check losses.
    pub objective: f64,
    /// Observations on the hyperplane, ascending.
    pub fitted: Vec<usize>,
    /// Coverage counts.
    pub counts: Counts,
    /// Number of observations.
    pub n: usize,
    /// [`RegressionProblem::fingerprint`] of the data.
    pub fingerprint: u64,
}

impl RegressionQuantile {
    /// `b'y - c'x - a`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.b, y) - dot(&self.c, x) - self.a
    }

    /// The response-space halfplane `{y : b'y ≥ c'x0 + a}`.
    pub fn cut_halfplane(&self, x0: &[f64]) -> Result<Hyperplane> {
        if x0.len() != self.c.len() {
            return Err(Error::DimensionMismatch { expected: self.c.len(), found: x0.len() });
        }
        Hyperplane::new(self.b.clone(), dot(&self.c, x0) + self.a)
    }
}

/// Exact τu regression quantile.
pub fn regression_quantile(rp: &RegressionProblem) -> Result<RegressionQuantile> {
    let fit = fit_directional(&rp.y, rp.k, &rp.x, rp.q, rp.tau, &rp.u)?;
    Ok(RegressionQuantile {
        tau: rp.tau,
        u: rp.u.clone(),
        a: fit.a,
        b: fit.b,
        c: fit.c_reg,
        lambda: fit.lambda,
        objective: fit.objective,
        fitted: fit.fitted,
        counts: fit.counts,
        n: rp.n(),
        fingerprint: rp.fingerprint(),
    })
}

/// `count` equispaced directions in a bivariate response space, from angle 0.
pub fn direction_grid(count: usize) -> Vec<Direction> {
    equispaced_directions(count, 0.0)
}

/// One regression quantile per direction.
pub fn regression_grid(rp: &RegressionProblem, directions: &[Direction]) -> Result<Vec<RegressionQuantile>> {
    directions
        .iter()
        .enumerate()
        .map(|(index, u)| {
            rp.with_direction(u.clone())
                .and_then(|p| regression_quantile(&p))
                .map_err(|e| Error::AtDirection { index, source: alloc::boxed::Box::new(e) })
        })
        .collect()
}

/// Response-space region at regressor value `x0`: intersection of `{y : b'y ≥ c'x0 + a}`.
pub fn fixed_x_cut(models: &[RegressionQuantile], x0: &[f64]) -> Result<ConvexRegion2D> {
    let first = models.first().ok_or(Error::InvalidInput("no models"))?;
    if first.b.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: first.b.len() });
    }
    if models.iter().any(|m| m.fingerprint != first.fingerprint || m.tau != first.tau) {
        return Err(Error::MixedModels);
    }
    let hs = models.iter().map(|m| m.cut_halfplane(x0)).collect::<Result<Vec<_>>>()?;
    intersect_halfplanes_2d(&hs)
}

/// Coverage of one bin of the first regressor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCoverage {
    /// Smallest regressor value in the bin.
    pub lo: f64,
    /// Largest regressor value in the bin.
    pub hi: f64,
    /// Observations in the bin.
    pub count: usize,
    /// Fraction strictly below the hyperplane.
    pub below_fraction: f64,
    /// `below_fraction - τ`.
    pub deviation: f64,
    /// Binomial scale `3·sqrt(τ(1-τ)/count)`.
    pub tolerance: f64,
}

impl BinCoverage {
    /// Deviation beyond the binomial tolerance.
    pub fn flagged(&self) -> bool {
        libm::fabs(self.deviation) > self.tolerance
    }
}

/// Global and per-bin coverage of a fitted regression quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Fraction of all observations strictly below.
    pub global_below_fraction: f64,
    /// `global_below_fraction - τ`.
    pub global_deviation: f64,
    /// Equal-count bins in increasing order of the first regressor.
    pub bins: Vec<BinCoverage>,
}

impl CoverageReport {
    /// Whether any bin deviates beyond its tolerance.
    pub fn any_flagged(&self) -> bool {
        self.bins.iter().any(BinCoverage::flagged)
    }
}

/// Empirical below-fraction minus τ, globally and in `bins` equal-count bins of the first regressor.
pub fn coverage_diagnostic(rp: &RegressionProblem, q: &RegressionQuantile, bins: usize) -> Result<CoverageReport> {
    if rp.q == 0 {
        return Err(Error::InvalidInput("coverage diagnostic needs a regressor"));
    }
    if bins < 2 {
        return Err(Error::InvalidInput("need at least two bins"));
    }
    if q.fingerprint != rp.fingerprint() {
        return Err(Error::MixedModels);
    }
    let n = rp.n();
    let mut below = alloc::vec![false; n];
    for (i, flag) in below.iter_mut().enumerate() {
        *flag = q.fitted.binary_search(&i).is_err() && q.residual(rp.x_row(i), rp.y_row(i)) < 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| rp.x_row(i)[0].partial_cmp(&rp.x_row(j)[0]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    let tau = rp.tau;
    let mut out = Vec::with_capacity(bins);
    for bin in 0..bins {
        let (start, end) = (bin * n / bins, (bin + 1) * n / bins);
        let count = end - start;
        if count < MIN_BIN_COUNT {
            return Err(Error::TooFewPointsPerBin { bin, count });
        }
        let idx = &order[start..end];
        let hits = idx.iter().filter(|&&i| below[i]).count();
        let frac = hits as f64 / count as f64;
        out.push(BinCoverage {
            lo: rp.x_row(idx[0])[0],
            hi: rp.x_row(idx[count - 1])[0],
            count,
            below_fraction: frac,
            deviation: frac - tau,
            tolerance: 3.0 * libm::sqrt(tau * (1.0 - tau) / count as f64),
        });
    }
    let global = below.iter().filter(|&&b| b).count() as f64 / n as f64;
    Ok(CoverageReport { global_below_fraction: global, global_deviation: global - tau, bins: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_output_exact_fit() {
        let rp = RegressionProblem::new(
            vec![0.0, 1.0, 2.0],
            1,
            vec![0.0, 2.0, 4.0],
            1,
            0.4,
            Direction::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let q = regression_quantile(&rp).unwrap();
        assert_eq!(q.b, vec![1.0]);
        assert!((q.c[0] - 2.0).abs() < 1e-12);
        assert!(q.a.abs() < 1e-12);
        assert_eq!(q.objective, 0.0);
        assert_eq!(q.lambda, 0.0);
    }

    #[test]
    fn mixed_models_rejected() {
        let y = vec![0.0, 0.1, 1.0, 0.3, 0.2, 1.1, 0.9, 0.8, 0.5, 0.45, 0.1, 0.7];
        let x = vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
        let rp = RegressionProblem::new(x.clone(), 1, y.clone(), 2, 0.3, Direction::from_angle(0.0)).unwrap();
        let a = regression_quantile(&rp).unwrap();
        let rp2 = RegressionProblem::new(x, 1, y, 2, 0.4, Direction::from_angle(1.0)).unwrap();
        let b = regression_quantile(&rp2).unwrap();
        assert_eq!(fixed_x_cut(&[a, b], &[0.0]), Err(Error::MixedModels));
    }

    #[test]
    fn bins_too_small() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + (v * 1.7).sin()).collect();
        let rp = RegressionProblem::new(x, 1, y, 1, 0.3, Direction::new(vec![1.0]).unwrap()).unwrap();
        let q = regression_quantile(&rp).unwrap();
        assert!(matches!(coverage_diagnostic(&rp, &q, 2), Err(Error::TooFewPointsPerBin { bin: 0, count: 4 })));
    }
}

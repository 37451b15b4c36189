//! τu-quantile hyperplanes and their Lagrange multipliers.
//!
//! For a direction `u` the τu-quantile hyperplane `{z : b'z = a}` minimises
//! `Σ ρ_τ(b'z_i - a)` subject to `b'u = 1`. Writing `b = u + Γ_u c` turns
//! this into an ordinary quantile regression of `u'z_i` on `(1, Γ_u'z_i)`,
//! which is how it is solved. The multiplier `λ` of the constraint `b'u = 1`
//! is recovered separately from the stationarity system
//! `Σ ψ_i z_i = λ u`, `Σ ψ_i = 0`, and by homogeneity equals the optimal
//! objective (sum scale, not mean).

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::{ortho_basis_unchecked, Direction, Hyperplane};
use crate::linalg::{dot, Lu};
use crate::qr::{solve_qr, QrProblem};
use crate::rng::SeededRng;
use crate::{Error, PointCloud, Result};

/// Observations strictly below, on, and strictly above a hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    /// `#{b'z_i < a}` (the outlying side).
    pub below: usize,
    /// Fitted observations.
    pub on: usize,
    /// `#{b'z_i > a}`.
    pub above: usize,
}

impl Counts {
    /// `N_below ≤ nτ ≤ N_below + N_on`.
    pub fn covers(&self, tau: f64) -> bool {
        let n = (self.below + self.on + self.above) as f64;
        let nt = n * tau;
        self.below as f64 <= nt + 1e-9 && nt <= (self.below + self.on) as f64 + 1e-9
    }
}

/// A τu-quantile hyperplane with its multiplier and coverage counts.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileHyperplane {
    /// Order τ.
    pub tau: f64,
    /// Direction.
    pub u: Direction,
    /// Intercept.
    pub a: f64,
    /// Normal with `b'u = 1`.
    pub b: Vec<f64>,
    /// Orthocomplement slopes: `b = u + Γ_u c`.
    pub c: Vec<f64>,
    /// Lagrange multiplier of `b'u = 1`, from the stationarity system.
    pub lambda: f64,
    /// Optimal `Σ ρ_τ(b'z_i - a)`.
    pub objective: f64,
    /// Fitted observations, ascending.
    pub fitted: Vec<usize>,
    /// Coverage counts.
    pub counts: Counts,
    /// `b'z_i - a` (exactly zero on `fitted`).
    pub residuals: Vec<f64>,
}

impl QuantileHyperplane {
    /// The hyperplane `{z : b'z = a}`.
    pub fn hyperplane(&self) -> Hyperplane {
        Hyperplane::new(self.b.clone(), self.a).expect("b'u = 1 implies b != 0")
    }
}

/// Solution of the stationarity system.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    /// Multiplier `λ`.
    pub lambda: f64,
    /// Weights of the fitted observations (same order as the fitted list).
    pub weights: Vec<f64>,
    /// Max-norm residual of `Σ ψ_i f_i - λ e` after solving.
    pub stationarity_residual: f64,
}

/// Solves `Σ_i ψ_i f_i = λ e` for `λ` and the fitted weights, where `f_i` are
/// feature rows of width `m`, `e` is the constraint gradient and `ψ_i` is
/// `τ`/`τ-1` by residual sign off the fitted set. Needs `|fitted| = m - 1`.
pub(crate) fn kkt_solve(
    features: &[f64],
    m: usize,
    fitted: &[usize],
    residuals: &[f64],
    tau: f64,
    e: &[f64],
) -> Result<KktSolution> {
    if fitted.len() + 1 != m {
        return Err(Error::DimensionMismatch { expected: m - 1, found: fitted.len() });
    }
    let n = residuals.len();
    let row = |i: usize| &features[i * m..(i + 1) * m];
    let mut is_fit = vec![false; n];
    fitted.iter().for_each(|&i| is_fit[i] = true);
    let mut rhs = vec![0.0; m];
    for i in (0..n).filter(|&i| !is_fit[i]) {
        let psi = if residuals[i] > 0.0 { tau } else { tau - 1.0 };
        rhs.iter_mut().zip(row(i)).for_each(|(s, f)| *s -= psi * f);
    }
    // columns: f_i for each fitted i, then -e
    let mut mat = vec![0.0; m * m];
    for r in 0..m {
        for (c, &i) in fitted.iter().enumerate() {
            mat[r * m + c] = row(i)[r];
        }
        mat[r * m + m - 1] = -e[r];
    }
    let lu = Lu::new(&mat, m).ok_or(Error::SingularSystem)?;
    let sol = lu.solve(&rhs);
    let lambda = sol[m - 1];
    let weights = sol[..m - 1].to_vec();
    let mut stat = vec![0.0; m];
    for i in 0..n {
        let psi = match fitted.iter().position(|&f| f == i) {
            Some(k) => weights[k],
            None if residuals[i] > 0.0 => tau,
            None => tau - 1.0,
        };
        stat.iter_mut().zip(row(i)).for_each(|(s, f)| *s += psi * f);
    }
    let stationarity_residual = stat.iter().zip(e).map(|(s, ei)| libm::fabs(s - lambda * ei)).fold(0.0, f64::max);
    Ok(KktSolution { lambda, weights, stationarity_residual })
}

/// Output of the shared directional fit used by location and regression.
pub(crate) struct DirectionalFit {
    pub a: f64,
    pub b: Vec<f64>,
    pub c_orth: Vec<f64>,
    pub c_reg: Vec<f64>,
    pub fitted: Vec<usize>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub lambda: f64,
    pub counts: Counts,
}

/// Minimises `Σ ρ_τ(b'y_i - c'x_i - a)` subject to `b'u = 1`.
///
/// `ys` is row-major `n x k`, `xs` row-major `n x q` (`q` may be zero).
pub(crate) fn fit_directional(
    ys: &[f64],
    k: usize,
    xs: &[f64],
    q: usize,
    tau: f64,
    u: &Direction,
) -> Result<DirectionalFit> {
    if u.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, found: u.dim() });
    }
    let n = ys.len() / k;
    let gamma = ortho_basis_unchecked(u);
    let p = 1 + q + (k - 1);
    let mut design = Vec::with_capacity(n * p);
    let mut resp = Vec::with_capacity(n);
    for i in 0..n {
        let y = &ys[i * k..(i + 1) * k];
        resp.push(dot(u.as_slice(), y));
        design.push(1.0);
        design.extend_from_slice(&xs[i * q..(i + 1) * q]);
        design.extend(gamma.project(y));
    }
    let prob = QrProblem::new(resp, design, p, tau)?;
    let sol = solve_qr(&prob).map_err(|e| match e {
        Error::DegenerateDesign { indices } => Error::DegenerateData { indices },
        e => e,
    })?;
    let a = sol.beta[0];
    let c_reg = sol.beta[1..1 + q].to_vec();
    let beta_g = &sol.beta[1 + q..];
    let c_orth: Vec<f64> = beta_g.iter().map(|x| -x).collect();
    let shift = gamma.combine(&c_orth);
    let b: Vec<f64> = u.as_slice().iter().zip(&shift).map(|(x, y)| x + y).collect();
    let b = if k == 1 { u.as_slice().to_vec() } else { b };

    let counts = Counts { below: sol.n_negative(), on: sol.fitted.len(), above: sol.n_positive() };

    let m = 1 + q + k;
    let mut features = Vec::with_capacity(n * m);
    for i in 0..n {
        features.push(1.0);
        features.extend_from_slice(&xs[i * q..(i + 1) * q]);
        features.extend_from_slice(&ys[i * k..(i + 1) * k]);
    }
    let mut e = vec![0.0; 1 + q];
    e.extend_from_slice(u.as_slice());
    let lambda =
        if sol.objective == 0.0 { 0.0 } else { kkt_solve(&features, m, &sol.fitted, &sol.residuals, tau, &e)?.lambda };
    Ok(DirectionalFit {
        a,
        b,
        c_orth,
        c_reg,
        fitted: sol.fitted,
        residuals: sol.residuals,
        objective: sol.objective,
        lambda,
        counts,
    })
}

/// The τu-quantile hyperplane of a point cloud.
pub fn tau_u_quantile(cloud: &PointCloud, tau: f64, u: &Direction) -> Result<QuantileHyperplane> {
    let k = cloud.dim();
    if u.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, found: u.dim() });
    }
    if cloud.n() <= k {
        return Err(Error::InvalidInput("need more observations than dimensions"));
    }
    let fit = fit_directional(cloud.as_flat(), k, &[], 0, tau, u)?;
    Ok(QuantileHyperplane {
        tau,
        u: u.clone(),
        a: fit.a,
        b: fit.b,
        c: fit.c_orth,
        lambda: fit.lambda,
        objective: fit.objective,
        fitted: fit.fitted,
        counts: fit.counts,
        residuals: fit.residuals,
    })
}

/// Stationarity-system solution for a solved hyperplane, recomputed from
/// `(a, b)` and the fitted set alone.
pub fn kkt_reconstruction(q: &QuantileHyperplane, cloud: &PointCloud) -> Result<KktSolution> {
    let k = cloud.dim();
    if q.b.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: q.b.len() });
    }
    let h = q.hyperplane();
    let residuals: Vec<f64> = cloud.points().map(|z| h.residual(z)).collect();
    let mut features = Vec::with_capacity(cloud.n() * (k + 1));
    for z in cloud.points() {
        features.push(1.0);
        features.extend_from_slice(z);
    }
    let mut e = vec![0.0];
    e.extend_from_slice(q.u.as_slice());
    kkt_solve(&features, k + 1, &q.fitted, &residuals, q.tau, &e)
}

/// `λ` from the `(k+1) x (k+1)` stationarity system.
pub fn lagrange_multiplier(q: &QuantileHyperplane, cloud: &PointCloud) -> Result<f64> {
    Ok(kkt_reconstruction(q, cloud)?.lambda)
}

/// Mass centres of the two open halfspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct MassCenters {
    /// Mean of observations with `b'z > a`.
    pub mu_plus: Vec<f64>,
    /// Mean of observations with `b'z < a`.
    pub mu_minus: Vec<f64>,
    /// `u'(mu_plus - mu_minus)`.
    pub gap: f64,
}

/// Sample means of the points strictly above and strictly below `q`.
pub fn mass_center_gap(q: &QuantileHyperplane, cloud: &PointCloud) -> Result<MassCenters> {
    let k = cloud.dim();
    let h = q.hyperplane();
    let mut plus = vec![0.0; k];
    let mut minus = vec![0.0; k];
    let (mut np, mut nm) = (0usize, 0usize);
    for (i, z) in cloud.points().enumerate() {
        if q.fitted.contains(&i) {
            continue;
        }
        let r = h.residual(z);
        let acc = if r > 0.0 {
            np += 1;
            &mut plus
        } else {
            nm += 1;
            &mut minus
        };
        acc.iter_mut().zip(z).for_each(|(s, x)| *s += x);
    }
    if np == 0 || nm == 0 {
        return Err(Error::EmptyHalfspace);
    }
    plus.iter_mut().for_each(|x| *x /= np as f64);
    minus.iter_mut().for_each(|x| *x /= nm as f64);
    let diff: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| a - b).collect();
    let gap = dot(q.u.as_slice(), &diff);
    Ok(MassCenters { mu_plus: plus, mu_minus: minus, gap })
}

/// One entry of a multiplier scan.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEntry {
    /// Position in the input direction list.
    pub index: usize,
    /// Polar angle for planar directions.
    pub angle: Option<f64>,
    /// Multiplier.
    pub lambda: f64,
}

/// Multipliers over a direction list with a robust flagging summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSeries {
    /// Entries in input order.
    pub entries: Vec<LambdaEntry>,
    /// Median of the multipliers.
    pub median: f64,
    /// Median absolute deviation (unscaled).
    pub mad: f64,
    /// Threshold multiplier `c` of the rule `λ > median + c·MAD`.
    pub flag_c: f64,
    /// Indices (into `entries`) of flagged directions.
    pub flagged: Vec<usize>,
}

/// Default `c` in the flagging rule.
pub const DEFAULT_FLAG_C: f64 = 3.0;

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Computes `λ` in every direction and flags `λ > median + c·MAD`.
///
/// With a single direction, or a zero MAD, nothing is flagged.
pub fn lambda_scan(cloud: &PointCloud, tau: f64, directions: &[Direction], flag_c: f64) -> Result<LambdaSeries> {
    let mut entries = Vec::with_capacity(directions.len());
    for (index, u) in directions.iter().enumerate() {
        let q = tau_u_quantile(cloud, tau, u).map_err(|e| Error::AtDirection { index, source: Box::new(e) })?;
        let angle = (u.dim() == 2).then(|| u.angle());
        entries.push(LambdaEntry { index, angle, lambda: q.lambda });
    }
    let lambdas: Vec<f64> = entries.iter().map(|e| e.lambda).collect();
    let med = median(&lambdas);
    let devs: Vec<f64> = lambdas.iter().map(|l| libm::fabs(l - med)).collect();
    let mad = median(&devs);
    let flagged = if entries.len() < 2 || mad.is_nan() || mad <= 0.0 {
        Vec::new()
    } else {
        let cut = med + flag_c * mad;
        (0..entries.len()).filter(|&i| lambdas[i] > cut).collect()
    };
    Ok(LambdaSeries { entries, median: med, mad, flag_c, flagged })
}

/// Largest admissible outlier offset.
pub const MAX_ELL: u32 = 14;

/// 98 iid points uniform on `[-0.5, 0.5]²` followed by the outlier
/// `(0, 0.5 + ℓ/4)`. The base points depend on `seed` only.
pub fn figure2_scenario(seed: u64, ell: u32) -> Result<PointCloud> {
    if ell > MAX_ELL {
        return Err(Error::EllOutOfRange { ell });
    }
    let mut rng = SeededRng::new(seed);
    let mut data = Vec::with_capacity(2 * 99);
    for _ in 0..98 {
        data.push(rng.uniform_in(-0.5, 0.5));
        data.push(rng.uniform_in(-0.5, 0.5));
    }
    data.push(0.0);
    data.push(0.5 + ell as f64 / 4.0);
    PointCloud::new(2, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> PointCloud {
        PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]).unwrap()
    }

    #[test]
    fn three_point_hyperplane() {
        let u = Direction::new(vec![0.0, 1.0]).unwrap();
        let q = tau_u_quantile(&tri(), 0.2, &u).unwrap();
        assert!(q.a.abs() < 1e-15);
        assert!(q.b[0].abs() < 1e-15 && (q.b[1] - 1.0).abs() < 1e-15);
        assert_eq!(q.fitted, vec![0, 1]);
        assert_eq!(q.counts, Counts { below: 0, on: 2, above: 1 });
        assert!((q.lambda - 0.2).abs() < 1e-12);
        let kkt = kkt_reconstruction(&q, &tri()).unwrap();
        assert!((kkt.weights[0] + 0.1).abs() < 1e-12 && (kkt.weights[1] + 0.1).abs() < 1e-12);
        assert!(kkt.stationarity_residual < 1e-12);
    }

    #[test]
    fn univariate_orientation() {
        let c = PointCloud::new(1, vec![1.0, 2.0, 3.0]).unwrap();
        let up = tau_u_quantile(&c, 0.4, &Direction::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!((up.a, up.b[0]), (2.0, 1.0));
        assert_eq!(up.counts.below, 1);
        assert!(up.residuals[0] < 0.0);
        assert!((up.lambda - 1.0).abs() < 1e-12);
        let down = tau_u_quantile(&c, 0.4, &Direction::new(vec![-1.0]).unwrap()).unwrap();
        // {-z = -2}: lower halfline is z > 2
        assert_eq!((down.a, down.b[0]), (-2.0, -1.0));
        assert!(down.residuals[2] < 0.0 && down.residuals[0] > 0.0);
    }

    #[test]
    fn mass_centers_single_point_above() {
        let c = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.1], [0.5, 3.0], [0.2, -1.0], [0.8, -1.3]]).unwrap();
        let u = Direction::new(vec![0.0, 1.0]).unwrap();
        let q = tau_u_quantile(&c, 0.7, &u).unwrap();
        assert_eq!(q.counts.above, 1);
        let m = mass_center_gap(&q, &c).unwrap();
        assert_eq!(m.mu_plus, vec![0.5, 3.0]);
        assert!(m.gap > 0.0);
    }

    #[test]
    fn mass_centers_need_both_sides() {
        let q = tau_u_quantile(&tri(), 0.2, &Direction::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(mass_center_gap(&q, &tri()), Err(Error::EmptyHalfspace));
    }

    #[test]
    fn symmetric_cloud_mass_centers() {
        let c = PointCloud::from_points2(&[[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0], [0.3, 0.2]]).unwrap();
        let q = tau_u_quantile(&c, 0.26, &Direction::new(vec![0.0, 1.0]).unwrap()).unwrap();
        let m = mass_center_gap(&q, &c).unwrap();
        assert!(m.gap > 0.0);
        assert!(m.mu_plus[1] > m.mu_minus[1]);
    }

    #[test]
    fn scan_single_direction_has_no_flags() {
        let s = lambda_scan(&tri(), 0.2, &[Direction::new(vec![0.0, 1.0]).unwrap()], 3.0).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert!(s.flagged.is_empty());
    }

    #[test]
    fn scan_labels_failing_direction() {
        let dirs = [Direction::new(vec![0.0, 1.0]).unwrap(), Direction::new(vec![1.0, 0.0, 0.0]).unwrap()];
        match lambda_scan(&tri(), 0.2, &dirs, 3.0) {
            Err(Error::AtDirection { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn figure2_construction() {
        let a = figure2_scenario(11, 0).unwrap();
        let b = figure2_scenario(11, 14).unwrap();
        assert_eq!(a.n(), 99);
        assert_eq!(a.point(98), &[0.0, 0.5]);
        assert_eq!(b.point(98), &[0.0, 4.0]);
        assert_eq!(&a.as_flat()[..196], &b.as_flat()[..196]);
        assert!(a.as_flat()[..196].iter().all(|x| (-0.5..0.5).contains(x)));
        assert_eq!(figure2_scenario(11, 15), Err(Error::EllOutOfRange { ell: 15 }));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

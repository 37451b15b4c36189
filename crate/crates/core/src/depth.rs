//! Brute-force halfspace (Tukey) depth, used as ground truth.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::geometry::{intersect_halfplanes_2d, ConvexRegion2D, Direction, Hyperplane, Point2, GEOM_TOL};
use crate::linalg::dot;
use crate::qr::check_tau;
use crate::rng::SeededRng;
use crate::{Error, PointCloud, Result};

/// Integer depth `count` out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthValue {
    /// Minimal number of observations in a closed halfspace containing the point.
    pub count: usize,
    /// Number of observations.
    pub n: usize,
}

impl DepthValue {
    /// `count / n`.
    pub fn normalized(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.count as f64 / self.n as f64
        }
    }
}

const ANGLE_EPS: f64 = 1e-12;

/// Exact planar halfspace depth by an angular sweep around `x`, `O(n log n)`.
pub fn depth_2d(cloud: &PointCloud, x: Point2) -> Result<DepthValue> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: cloud.dim() });
    }
    let n = cloud.n();
    let mut coincident = 0;
    let mut angles: Vec<f64> = Vec::with_capacity(n);
    for z in cloud.points() {
        let (dx, dy) = (z[0] - x[0], z[1] - x[1]);
        if dx == 0.0 && dy == 0.0 {
            coincident += 1;
        } else {
            let a = libm::atan2(dy, dx);
            angles.push(if a < 0.0 { a + 2.0 * PI } else { a });
        }
    }
    if angles.is_empty() {
        return Ok(DepthValue { count: coincident, n });
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = angles.len();
    let mut doubled = angles.clone();
    doubled.extend(angles.iter().map(|a| a + 2.0 * PI));
    // points in the half-open semicircle (β, β + π]
    let count_from = |beta: f64| -> usize {
        let beta = if beta < 0.0 { beta + 2.0 * PI } else { beta };
        let lo = doubled.partition_point(|&a| a <= beta + ANGLE_EPS);
        let hi = doubled.partition_point(|&a| a <= beta + PI + ANGLE_EPS);
        hi - lo
    };
    let mut best = m;
    for &a in &angles {
        best = best.min(count_from(a)).min(count_from(a - PI));
    }
    Ok(DepthValue { count: best + coincident, n })
}

/// `{x : depth(x) ≥ ⌈nτ⌉}` as an intersection of halfplanes through point pairs.
///
/// For every line through two observations whose open side holds at most
/// `⌈nτ⌉ - 1` observations, the opposite closed side is kept. `O(n³)`.
pub fn depth_region_bruteforce_2d(cloud: &PointCloud, tau: f64) -> Result<ConvexRegion2D> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: cloud.dim() });
    }
    let n = cloud.n();
    check_tau(n, tau)?;
    let m = libm::ceil(n as f64 * tau) as usize;
    let mut hs = Vec::new();
    for i in 0..n {
        let zi = cloud.point2(i);
        for j in i + 1..n {
            let zj = cloud.point2(j);
            let nl = [-(zj[1] - zi[1]), zj[0] - zi[0]];
            let len = libm::hypot(nl[0], nl[1]);
            if len == 0.0 {
                continue;
            }
            let (mut left, mut right) = (0usize, 0usize);
            for z in cloud.points() {
                let s = (nl[0] * (z[0] - zi[0]) + nl[1] * (z[1] - zi[1])) / len;
                if s > GEOM_TOL {
                    left += 1;
                } else if s < -GEOM_TOL {
                    right += 1;
                }
            }
            let off = nl[0] * zi[0] + nl[1] * zi[1];
            if left < m {
                hs.push(Hyperplane::new(alloc::vec![-nl[0], -nl[1]], -off)?);
            }
            if right < m {
                hs.push(Hyperplane::new(alloc::vec![nl[0], nl[1]], off)?);
            }
        }
    }
    if hs.is_empty() {
        return Ok(ConvexRegion2D::empty());
    }
    intersect_halfplanes_2d(&hs)
}

/// `#{i : u'(z_i - x) ≥ 0}` with tolerance [`GEOM_TOL`].
pub fn halfspace_count(cloud: &PointCloud, x: &[f64], u: &Direction) -> Result<usize> {
    if cloud.dim() != x.len() || u.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), found: u.dim() });
    }
    let ux = dot(u.as_slice(), x);
    Ok(cloud.points().filter(|z| dot(u.as_slice(), z) - ux >= -GEOM_TOL).count())
}

/// Upper bound on the depth from explicit directions.
pub fn depth_over_directions(cloud: &PointCloud, x: &[f64], directions: &[Direction]) -> Result<DepthValue> {
    let mut count = cloud.n();
    for u in directions {
        count = count.min(halfspace_count(cloud, x, u)?);
    }
    Ok(DepthValue { count, n: cloud.n() })
}

/// Upper bound on the depth from `samples` seeded Gaussian directions.
pub fn depth_kd_approx(cloud: &PointCloud, x: &[f64], samples: usize, seed: u64) -> Result<DepthValue> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one direction"));
    }
    let k = cloud.dim();
    let mut rng = SeededRng::new(seed);
    let mut dirs = Vec::with_capacity(samples);
    while dirs.len() < samples {
        let v: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
        if let Ok(u) = Direction::new(v) {
            dirs.push(u);
        }
    }
    depth_over_directions(cloud, x, &dirs)
}

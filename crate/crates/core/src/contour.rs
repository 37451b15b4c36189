//! Exact fixed-τ direction sweep in the plane.
//!
//! A planar τu-quantile hyperplane is the line through two observations
//! `(z_i, z_j)` together with an orientation (which side is "upper"). For a
//! fixed oriented line, the signs of all other residuals do not depend on
//! `u`, and the stationarity conditions reduce to one scalar condition: with
//! `θ` the angle of `u` measured from `z_j - z_i`, the dual weight of `z_j`
//! is `α·cot θ + β` and that of `z_i` is `-S - v_j`, where `S = Σ ψ_l`
//! over the non-fitted points. Requiring both weights in `[τ-1, τ]` pins
//! `θ` to a single interval, the arc of directions for which the line is
//! optimal.
//!
//! [`sweep`] starts from one exact solve at `φ = 0` and then walks the arcs:
//! when a weight reaches a bound the corresponding observation leaves, the
//! line rotates about the other fitted point, and the first observation hit
//! enters. [`sweep_enumerate`] evaluates every oriented pair instead and is
//! kept as an independent check.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::directional::{kkt_solve, tau_u_quantile, Counts, QuantileHyperplane};
use crate::geometry::{
    intersect_halfplanes_2d, normalize_angle, point_in_region, ConvexRegion2D, Direction, Hyperplane, Location, Point2,
    RegionStatus,
};
use crate::qr::{check_tau, rho};
use crate::{Error, PointCloud, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Slack allowed between the end of one arc and the start of the next.
pub const ARC_SLACK: f64 = 1e-9;

/// Angular interval `[start, start + width)`; `start ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    /// First direction angle of the arc.
    pub start: f64,
    /// Angular width.
    pub width: f64,
}

impl Arc {
    /// End angle (may exceed 2π).
    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    /// Whether `phi` lies in the arc (modulo 2π).
    pub fn contains(&self, phi: f64) -> bool {
        let d = normalize_angle(phi - self.start);
        d < self.width || self.width >= TWO_PI
    }

    /// Midpoint angle.
    pub fn mid(&self) -> f64 {
        normalize_angle(self.start + 0.5 * self.width)
    }
}

/// Which side of the directed line `z_i -> z_j` (with `i < j`) is upper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    /// Upper side to the left of `z_j - z_i`.
    Left,
    /// Upper side to the right.
    Right,
}

/// One distinct hyperplane of a sweep and the directions it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptHyperplane {
    /// Fitted pair, ascending.
    pub fitted: [usize; 2],
    /// Orientation relative to the fitted pair.
    pub orientation: Orientation,
    /// Unit normal pointing to the upper side.
    pub normal: Point2,
    /// `normal · z_i`.
    pub offset: f64,
    /// Coverage counts.
    pub counts: Counts,
    /// Directions for which this hyperplane is the τu-quantile.
    pub arc: Arc,
}

impl SweptHyperplane {
    /// The closed upper halfplane `{z : normal·z ≥ offset}`.
    pub fn halfplane(&self) -> Hyperplane {
        Hyperplane::new(self.normal.to_vec(), self.offset).expect("unit normal")
    }

    /// Key identifying the hyperplane: fitted pair plus orientation.
    pub fn key(&self) -> ([usize; 2], Orientation) {
        (self.fitted, self.orientation)
    }

    /// The τu-quantile hyperplane at direction angle `phi`, scaled so that `b'u = 1`.
    pub fn quantile_at(&self, cloud: &PointCloud, tau: f64, phi: f64) -> Result<QuantileHyperplane> {
        let u = Direction::from_angle(phi);
        let nu = self.normal[0] * u.as_slice()[0] + self.normal[1] * u.as_slice()[1];
        if nu <= 0.0 {
            return Err(Error::InvalidInput("direction outside the hyperplane's half circle"));
        }
        let b = vec![self.normal[0] / nu, self.normal[1] / nu];
        let a = self.offset / nu;
        let mut residuals: Vec<f64> = cloud.points().map(|z| b[0] * z[0] + b[1] * z[1] - a).collect();
        for &i in &self.fitted {
            residuals[i] = 0.0;
        }
        let objective = residuals.iter().map(|&r| rho(tau, r)).sum();
        let mut features = Vec::with_capacity(3 * cloud.n());
        for z in cloud.points() {
            features.extend_from_slice(&[1.0, z[0], z[1]]);
        }
        let e = [0.0, u.as_slice()[0], u.as_slice()[1]];
        let kkt = kkt_solve(&features, 3, &self.fitted, &residuals, tau, &e)?;
        // Γ_u is one column w; b = u + w c
        let w = crate::geometry::ortho_basis_unchecked(&u).columns()[0].clone();
        let c = vec![(b[0] - u.as_slice()[0]) * w[0] + (b[1] - u.as_slice()[1]) * w[1]];
        Ok(QuantileHyperplane {
            tau,
            u,
            a,
            b,
            c,
            lambda: kkt.lambda,
            objective,
            fitted: self.fitted.to_vec(),
            counts: self.counts,
            residuals,
        })
    }
}

/// The finite collection of τu-quantile hyperplanes over all directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Order τ.
    pub tau: f64,
    /// Hyperplanes in sweep order.
    pub hyperplanes: Vec<SweptHyperplane>,
    /// Basis changes performed after the initial solve.
    pub n_pivots: usize,
}

impl SweepResult {
    /// Hyperplane whose arc contains `phi`.
    pub fn at(&self, phi: f64) -> Option<&SweptHyperplane> {
        self.hyperplanes.iter().find(|h| h.arc.contains(phi))
    }

    /// Sorted keys, convenient for comparing two sweeps.
    pub fn keys(&self) -> Vec<([usize; 2], Orientation)> {
        let mut k: Vec<_> = self.hyperplanes.iter().map(SweptHyperplane::key).collect();
        k.sort();
        k
    }

    /// Sum of arc widths (2π for a complete sweep).
    pub fn total_width(&self) -> f64 {
        self.hyperplanes.iter().map(|h| h.arc.width).sum()
    }
}

/// Oriented pair with its optimality data.
#[derive(Debug, Clone)]
struct Candidate {
    hyper: SweptHyperplane,
    arc: Option<Arc>,
    // weight of z_j is alpha·cot θ + beta
    alpha: f64,
    s_sum: f64,
    lower: f64,
    upper: f64,
}

fn evaluate(cloud: &PointCloud, tau: f64, i: usize, j: usize, orientation: Orientation) -> Result<Candidate> {
    debug_assert!(i < j);
    let zi = cloud.point2(i);
    let zj = cloud.point2(j);
    let d = [zj[0] - zi[0], zj[1] - zi[1]];
    let len = libm::hypot(d[0], d[1]);
    if len == 0.0 {
        return Err(Error::DegenerateData { indices: vec![i, j] });
    }
    let dh = [d[0] / len, d[1] / len];
    let nl = [-dh[1], dh[0]];
    let sigma = if orientation == Orientation::Left { 1.0 } else { -1.0 };
    let normal = [sigma * nl[0], sigma * nl[1]];

    let (mut s_sum, mut s_vec) = (0.0, [0.0, 0.0]);
    let mut counts = Counts { below: 0, on: 2, above: 0 };
    for (l, z) in cloud.points().enumerate() {
        if l == i || l == j {
            continue;
        }
        let w = [z[0] - zi[0], z[1] - zi[1]];
        let side = normal[0] * w[0] + normal[1] * w[1];
        if libm::fabs(side) <= 1e-11 * (1.0 + libm::hypot(w[0], w[1])) {
            let mut idx = vec![i, j, l];
            idx.sort_unstable();
            return Err(Error::DegenerateData { indices: idx });
        }
        let psi = if side > 0.0 {
            counts.above += 1;
            tau
        } else {
            counts.below += 1;
            tau - 1.0
        };
        s_sum += psi;
        s_vec[0] += psi * z[0];
        s_vec[1] += psi * z[1];
    }
    let g = [s_vec[0] - s_sum * zi[0], s_vec[1] - s_sum * zi[1]];
    let alpha = (nl[0] * g[0] + nl[1] * g[1]) / len;
    let beta = -(g[0] * d[0] + g[1] * d[1]) / (len * len);
    let lower = (tau - 1.0).max(-s_sum - tau);
    let upper = tau.min(-s_sum - tau + 1.0);

    let theta = if lower > upper {
        None
    } else if alpha > 0.0 {
        Some((libm::atan2(alpha, upper - beta), libm::atan2(alpha, lower - beta)))
    } else if alpha < 0.0 {
        Some((libm::atan2(-alpha, beta - lower), libm::atan2(-alpha, beta - upper)))
    } else if lower <= beta && beta <= upper {
        Some((0.0, PI))
    } else {
        None
    };
    let base = libm::atan2(dh[1], dh[0]) + if sigma > 0.0 { 0.0 } else { PI };
    let arc = theta.map(|(lo, hi)| Arc { start: normalize_angle(base + lo), width: (hi - lo).max(0.0) });
    let offset = normal[0] * zi[0] + normal[1] * zi[1];
    Ok(Candidate {
        hyper: SweptHyperplane {
            fitted: [i, j],
            orientation,
            normal,
            offset,
            counts,
            arc: arc.unwrap_or(Arc { start: 0.0, width: 0.0 }),
        },
        arc,
        alpha,
        s_sum,
        lower,
        upper,
    })
}

fn evaluate_pair(cloud: &PointCloud, tau: f64, p: usize, q: usize, normal: Point2) -> Result<Candidate> {
    let (i, j) = if p < q { (p, q) } else { (q, p) };
    let zi = cloud.point2(i);
    let zj = cloud.point2(j);
    let nl = [-(zj[1] - zi[1]), zj[0] - zi[0]];
    let orientation = if nl[0] * normal[0] + nl[1] * normal[1] > 0.0 { Orientation::Left } else { Orientation::Right };
    evaluate(cloud, tau, i, j, orientation)
}

/// Circle distance between two angles.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(TWO_PI - d)
}

/// Next basis when the arc of `cur` ends: the observation whose weight hit
/// a bound leaves, the line rotates about the other fitted point and the
/// first observation met enters.
fn pivot(cloud: &PointCloud, tau: f64, cur: &Candidate) -> Result<Candidate> {
    let [i, j] = cur.hyper.fitted;
    // at the end of the arc the weight of z_j sits at `lower` (α > 0) or `upper` (α < 0)
    let (leaving, target) = if cur.alpha > 0.0 {
        if tau - 1.0 >= -cur.s_sum - tau {
            (j, -1.0)
        } else {
            (i, 1.0)
        }
    } else if tau <= -cur.s_sum - tau + 1.0 {
        (j, 1.0)
    } else {
        (i, -1.0)
    };
    let _ = (cur.lower, cur.upper);
    let keep = if leaving == i { j } else { i };
    let zp = cloud.point2(keep);
    let zm = cloud.point2(leaving);
    let len = libm::hypot(zm[0] - zp[0], zm[1] - zp[1]);
    let e = [(zm[0] - zp[0]) / len, (zm[1] - zp[1]) / len];
    let nrm = cur.hyper.normal;
    let s_n = if nrm[0] * -e[1] + nrm[1] * e[0] > 0.0 { 1.0 } else { -1.0 };
    let rot_sign = -target * s_n;

    let mut best: Option<(f64, usize)> = None;
    for (q, z) in cloud.points().enumerate() {
        if q == keep || q == leaving {
            continue;
        }
        let w = [z[0] - zp[0], z[1] - zp[1]];
        let mut om = libm::atan2(e[0] * w[1] - e[1] * w[0], e[0] * w[0] + e[1] * w[1]);
        if om < 0.0 {
            om += PI;
        }
        if om >= PI {
            om -= PI;
        }
        let turn = if rot_sign > 0.0 { om } else { PI - om };
        if best.is_none_or(|(bt, bq)| turn < bt || (turn == bt && q < bq)) {
            best = Some((turn, q));
        }
    }
    let (turn, q) = best.ok_or(Error::InvalidInput("need at least three observations"))?;
    let ang = rot_sign * turn;
    let (c, s) = (libm::cos(ang), libm::sin(ang));
    let new_normal = [c * nrm[0] - s * nrm[1], s * nrm[0] + c * nrm[1]];
    evaluate_pair(cloud, tau, keep, q, new_normal)
}

/// Local repair: among oriented pairs through either point of `around`, the
/// one whose arc starts closest to `cursor`.
fn repair(cloud: &PointCloud, tau: f64, around: [usize; 2], cursor: f64) -> Result<Candidate> {
    let mut best: Option<(f64, Candidate)> = None;
    for &p in &around {
        for q in 0..cloud.n() {
            if q == p {
                continue;
            }
            let (i, j) = if p < q { (p, q) } else { (q, p) };
            for o in [Orientation::Left, Orientation::Right] {
                let cand = evaluate(cloud, tau, i, j, o)?;
                if let Some(arc) = cand.arc {
                    let gap = angle_gap(arc.start, cursor);
                    if arc.width > 0.0 && best.as_ref().is_none_or(|(g, _)| gap < *g) {
                        best = Some((gap, cand));
                    }
                }
            }
        }
    }
    match best {
        Some((gap, cand)) if gap <= ARC_SLACK => Ok(cand),
        _ => Err(Error::ArcGap { at: normalize_angle(cursor) }),
    }
}

fn validate(cloud: &PointCloud, tau: f64) -> Result<()> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: cloud.dim() });
    }
    if cloud.n() < 3 {
        return Err(Error::InvalidInput("need at least three observations"));
    }
    check_tau(cloud.n(), tau)
}

/// Parametric sweep of the τu-quantile hyperplanes over `u = (cos φ, sin φ)`.
pub fn sweep(cloud: &PointCloud, tau: f64) -> Result<SweepResult> {
    validate(cloud, tau)?;
    let n = cloud.n();
    let q0 = tau_u_quantile(cloud, tau, &Direction::from_angle(0.0))?;
    let inner = [q0.b[0], q0.b[1]];
    let first = evaluate_pair(cloud, tau, q0.fitted[0], q0.fitted[1], inner)?;
    let first = match first.arc {
        Some(arc)
            if arc.contains(0.0)
                || angle_gap(arc.end(), 0.0) <= ARC_SLACK
                || angle_gap(arc.start, 0.0) <= ARC_SLACK =>
        {
            first
        }
        _ => return Err(Error::ArcGap { at: 0.0 }),
    };
    let first_arc = first.arc.expect("checked above");
    // unwrap so that the sweep runs over [begin, begin + 2π)
    let begin = if first_arc.start > PI { first_arc.start - TWO_PI } else { first_arc.start };
    let stop = begin + TWO_PI;
    let mut cursor = begin + first_arc.width;
    let first_key = first.hyper.key();
    let mut out = vec![first.hyper.clone()];
    out[0].arc = Arc { start: normalize_angle(begin), width: first_arc.width };
    let mut cur = first;
    let mut pivots = 0;
    let limit = 4 * n * n + 16;
    loop {
        let mut next = pivot(cloud, tau, &cur)?;
        pivots += 1;
        let ok = next.arc.is_some_and(|a| angle_gap(a.start, cursor) <= ARC_SLACK);
        if !ok {
            next = repair(cloud, tau, cur.hyper.fitted, cursor)?;
        }
        if next.hyper.key() == first_key {
            if libm::fabs(cursor - stop) > ARC_SLACK {
                return Err(Error::ArcGap { at: normalize_angle(cursor) });
            }
            break;
        }
        let width = next.arc.expect("validated").width;
        let mut h = next.hyper.clone();
        h.arc = Arc { start: normalize_angle(cursor), width };
        cursor += width;
        if cursor > stop + ARC_SLACK {
            return Err(Error::ArcGap { at: normalize_angle(stop) });
        }
        out.push(h);
        cur = next;
        if pivots > limit {
            return Err(Error::NoConvergence { pivots });
        }
    }
    Ok(SweepResult { tau, hyperplanes: out, n_pivots: pivots })
}

/// Every oriented pair with a nonempty arc, sorted by arc start. `O(n³)`.
pub fn sweep_enumerate(cloud: &PointCloud, tau: f64) -> Result<SweepResult> {
    validate(cloud, tau)?;
    let n = cloud.n();
    let mut hs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for o in [Orientation::Left, Orientation::Right] {
                let c = evaluate(cloud, tau, i, j, o)?;
                if let Some(arc) = c.arc {
                    if arc.width > 0.0 {
                        hs.push(c.hyper);
                    }
                }
            }
        }
    }
    hs.sort_by(|a, b| a.arc.start.partial_cmp(&b.arc.start).unwrap_or(Ordering::Equal));
    let total: f64 = hs.iter().map(|h| h.arc.width).sum();
    if libm::fabs(total - TWO_PI) > 1e-7 {
        return Err(Error::ArcGap { at: total });
    }
    Ok(SweepResult { tau, hyperplanes: hs, n_pivots: 0 })
}

/// Intersection of the upper halfplanes of all swept hyperplanes.
pub fn fixed_tau_region(s: &SweepResult) -> Result<ConvexRegion2D> {
    if s.hyperplanes.is_empty() {
        return Ok(ConvexRegion2D::empty());
    }
    let hs: Vec<Hyperplane> = s.hyperplanes.iter().map(SweptHyperplane::halfplane).collect();
    intersect_halfplanes_2d(&hs)
}

/// Fraction of observations inside or on the boundary of `r`.
pub fn probability_contents(r: &ConvexRegion2D, cloud: &PointCloud) -> Result<f64> {
    if r.status() == RegionStatus::Empty || cloud.n() == 0 {
        return Ok(0.0);
    }
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: cloud.dim() });
    }
    let mut hits = 0usize;
    for i in 0..cloud.n() {
        if point_in_region(r, cloud.point2(i))? != Location::Outside {
            hits += 1;
        }
    }
    Ok(hits as f64 / cloud.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_area;

    fn hexagon() -> PointCloud {
        let pts: Vec<[f64; 2]> =
            (0..6).map(|i| [libm::cos(i as f64 * PI / 3.0), libm::sin(i as f64 * PI / 3.0)]).collect();
        PointCloud::from_points2(&pts).unwrap()
    }

    #[test]
    fn triangle_sides() {
        let c = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]).unwrap();
        let s = sweep(&c, 0.3).unwrap();
        assert_eq!(s.hyperplanes.len(), 3);
        assert!(s.hyperplanes.iter().all(|h| h.counts.below == 0));
        assert_eq!(s.keys(), sweep_enumerate(&c, 0.3).unwrap().keys());
        let r = fixed_tau_region(&s).unwrap();
        assert_eq!(r.facet_count(), 3);
        assert!((polygon_area(&r).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(probability_contents(&r, &c).unwrap(), 1.0);
    }

    #[test]
    fn hexagon_sides_and_chords() {
        let c = hexagon();
        let s = sweep(&c, 0.25).unwrap();
        assert_eq!(s.keys(), sweep_enumerate(&c, 0.25).unwrap().keys());
        // sides serve the directions near their normals, skip-one chords the rest
        assert_eq!(s.hyperplanes.len(), 12);
        let chords: Vec<_> = s.hyperplanes.iter().filter(|h| h.counts.below == 1).collect();
        assert_eq!(chords.len(), 6);
        for h in &chords {
            let [i, j] = h.fitted;
            assert!(j - i == 2 || j - i == 4);
        }
        for h in &s.hyperplanes {
            let [i, j] = h.fitted;
            assert!(h.counts.below == 1 || j - i == 1 || j - i == 5);
        }
        assert!((s.total_width() - TWO_PI).abs() < 1e-9);
        let r = fixed_tau_region(&s).unwrap();
        assert_eq!(r.facet_count(), 6);
        assert!((polygon_area(&r).unwrap() - libm::sqrt(3.0) / 2.0).abs() < 1e-12);
        let target = [0.5, libm::sqrt(3.0) / 6.0];
        assert!(r.vertices().iter().any(|v| libm::hypot(v[0] - target[0], v[1] - target[1]) < 1e-9));
        assert_eq!(probability_contents(&r, &c).unwrap(), 0.0);
    }

    #[test]
    fn above_max_depth_is_empty() {
        let c = hexagon();
        // ⌈6·0.55⌉ = 4 exceeds the maximal depth of the hexagon
        let s = sweep(&c, 0.55).unwrap();
        let r = fixed_tau_region(&s).unwrap();
        assert_eq!(r.status(), RegionStatus::Empty);
        assert_eq!(probability_contents(&r, &c).unwrap(), 0.0);
    }

    #[test]
    fn quantile_at_matches_direct_solve() {
        let c = PointCloud::from_points2(&[[0.1, 0.2], [1.3, 0.1], [0.7, 1.1], [0.2, 0.9], [1.05, 0.62], [0.55, -0.3]])
            .unwrap();
        let s = sweep(&c, 0.3).unwrap();
        for h in &s.hyperplanes {
            let phi = h.arc.mid();
            let via_sweep = h.quantile_at(&c, 0.3, phi).unwrap();
            let direct = tau_u_quantile(&c, 0.3, &Direction::from_angle(phi)).unwrap();
            assert_eq!(via_sweep.fitted, direct.fitted);
            assert!((via_sweep.a - direct.a).abs() < 1e-9);
            assert!((via_sweep.lambda - direct.lambda).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_collinear_on_solution() {
        let c = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0], [0.5, 2.0]]).unwrap();
        assert!(matches!(sweep(&c, 0.1), Err(Error::DegenerateData { .. })));
    }
}

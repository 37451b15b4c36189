//! Directions, hyperplanes, orthocomplement bases and planar convex regions.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Absolute tolerance on (unit-normal) halfplane residuals.
pub const GEOM_TOL: f64 = 1e-9;

/// A point in the plane.
pub type Point2 = [f64; 2];

/// Unit vector in `R^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    u: Vec<f64>,
}

impl Direction {
    /// Normalises `v`; fails on zero, empty or non-finite input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::DimensionTooSmall { k: 0 });
        }
        let len = norm(&v);
        if !len.is_finite() || len == 0.0 {
            return Err(Error::InvalidInput("direction must be finite and nonzero"));
        }
        Ok(Direction { u: v.into_iter().map(|x| x / len).collect() })
    }

    /// `(cos φ, sin φ)`.
    pub fn from_angle(phi: f64) -> Self {
        Direction { u: vec![libm::cos(phi), libm::sin(phi)] }
    }

    /// Components.
    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }

    /// Dimension `k`.
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Polar angle in `[0, 2π)`; only meaningful for `k = 2`.
    pub fn angle(&self) -> f64 {
        normalize_angle(libm::atan2(self.u[1], self.u[0]))
    }
}

/// `count` equispaced planar directions starting at `phase`.
pub fn equispaced_directions(count: usize, phase: f64) -> Vec<Direction> {
    (0..count).map(|j| Direction::from_angle(phase + 2.0 * PI * j as f64 / count as f64)).collect()
}

/// Maps an angle into `[0, 2π)`.
pub fn normalize_angle(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = phi - two_pi * libm::floor(phi / two_pi);
    if r >= two_pi {
        0.0
    } else {
        r
    }
}

/// The hyperplane `{z : b'z = a}`; its upper halfspace is `{z : b'z ≥ a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    b: Vec<f64>,
    a: f64,
}

impl Hyperplane {
    /// Fails if `b` is zero or anything is non-finite.
    pub fn new(b: Vec<f64>, a: f64) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::DimensionTooSmall { k: 0 });
        }
        if !a.is_finite() || b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("hyperplane coefficients must be finite"));
        }
        if b.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidInput("hyperplane normal must be nonzero"));
        }
        Ok(Hyperplane { b, a })
    }

    /// Normal vector `b`.
    pub fn normal(&self) -> &[f64] {
        &self.b
    }

    /// Offset `a`.
    pub fn offset(&self) -> f64 {
        self.a
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `b'z - a`.
    pub fn residual(&self, z: &[f64]) -> f64 {
        dot(&self.b, z) - self.a
    }

    /// Residual measured with a unit normal (signed distance).
    pub fn signed_distance(&self, z: &[f64]) -> f64 {
        self.residual(z) / norm(&self.b)
    }

    /// The same halfspace with `‖b‖ = 1`.
    pub fn unit(&self) -> Hyperplane {
        let s = norm(&self.b);
        Hyperplane { b: self.b.iter().map(|x| x / s).collect(), a: self.a / s }
    }
}

/// Orthonormal basis `Γ_u` of the orthogonal complement of a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    cols: Vec<Vec<f64>>,
}

impl OrthoBasis {
    /// Columns of `Γ_u`, each of length `k`.
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// `Γ'z`.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| dot(c, z)).collect()
    }

    /// `Γc`.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let k = self.cols.first().map_or(0, Vec::len);
        let mut out = vec![0.0; k];
        for (col, w) in self.cols.iter().zip(c) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += w * x;
            }
        }
        out
    }
}

/// Canonical basis of `u^⊥`.
///
/// Gram-Schmidt (applied twice) on the standard basis vectors, skipping the
/// index of the largest-magnitude entry of `u` (first such index on ties).
pub fn orthocomplement_basis(u: &Direction) -> Result<OrthoBasis> {
    let k = u.dim();
    if k < 2 {
        return Err(Error::DimensionTooSmall { k });
    }
    Ok(ortho_basis_unchecked(u))
}

/// Same as [`orthocomplement_basis`] but returns an empty basis for `k = 1`.
pub(crate) fn ortho_basis_unchecked(u: &Direction) -> OrthoBasis {
    let u = u.as_slice();
    let k = u.len();
    let skip = u
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, x)| if libm::fabs(*x) > bv { (i, libm::fabs(*x)) } else { (bi, bv) })
        .0;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    for idx in (0..k).filter(|&i| i != skip) {
        let mut e = vec![0.0; k];
        e[idx] = 1.0;
        for _ in 0..2 {
            let p = dot(&e, u);
            for (x, y) in e.iter_mut().zip(u) {
                *x -= p * y;
            }
            for c in &cols {
                let p = dot(&e, c);
                for (x, y) in e.iter_mut().zip(c) {
                    *x -= p * y;
                }
            }
        }
        let len = norm(&e);
        e.iter_mut().for_each(|x| *x /= len);
        cols.push(e);
    }
    OrthoBasis { cols }
}

/// Boundedness status of a planar region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionStatus {
    /// Compact convex polygon (possibly degenerate).
    Bounded,
    /// Nonempty but unbounded.
    Unbounded,
    /// Empty intersection.
    Empty,
}

/// Classification of a point against a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// Every residual exceeds the tolerance.
    Inside,
    /// Within tolerance of the boundary.
    Boundary,
    /// Violates some halfplane.
    Outside,
}

/// Convex planar region given by counterclockwise vertices and the
/// halfplanes `{z : b'z ≥ a}` carrying its facets.
///
/// For bounded regions `halfplanes()[i]` supports the edge from
/// `vertices()[i]` to `vertices()[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion2D {
    vertices: Vec<Point2>,
    halfplanes: Vec<Hyperplane>,
    status: RegionStatus,
}

impl ConvexRegion2D {
    /// The empty region.
    pub fn empty() -> Self {
        ConvexRegion2D { vertices: Vec::new(), halfplanes: Vec::new(), status: RegionStatus::Empty }
    }

    /// Builds a bounded region from convex polygon vertices (either orientation).
    pub fn from_vertices(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.is_empty() {
            return Ok(Self::empty());
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("vertices must be finite"));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let m = vertices.len();
        let mut halfplanes = Vec::new();
        if m >= 3 {
            for i in 0..m {
                let p = vertices[i];
                let q = vertices[(i + 1) % m];
                let b = vec![-(q[1] - p[1]), q[0] - p[0]];
                let a = b[0] * p[0] + b[1] * p[1];
                halfplanes.push(Hyperplane::new(b, a)?);
            }
        }
        Ok(ConvexRegion2D { vertices, halfplanes, status: RegionStatus::Bounded })
    }

    /// Counterclockwise vertices.
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Non-redundant generating halfplanes.
    pub fn halfplanes(&self) -> &[Hyperplane] {
        &self.halfplanes
    }

    /// Status.
    pub fn status(&self) -> RegionStatus {
        self.status
    }

    /// Number of facets (edges of positive length for bounded regions).
    pub fn facet_count(&self) -> usize {
        self.halfplanes.len()
    }

    /// Whether the region is bounded.
    pub fn is_bounded(&self) -> bool {
        self.status == RegionStatus::Bounded
    }

    /// Vertex centroid; `None` for empty regions.
    pub fn vertex_centroid(&self) -> Option<Point2> {
        if self.vertices.is_empty() {
            return None;
        }
        let n = self.vertices.len() as f64;
        let (sx, sy) = self.vertices.iter().fold((0.0, 0.0), |(x, y), v| (x + v[0], y + v[1]));
        Some([sx / n, sy / n])
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let m = v.len();
    if m < 3 {
        return 0.0;
    }
    // shoelace relative to the first vertex to limit cancellation
    let o = v[0];
    let mut s = 0.0;
    for i in 1..m - 1 {
        let p = [v[i][0] - o[0], v[i][1] - o[1]];
        let q = [v[i + 1][0] - o[0], v[i + 1][1] - o[1]];
        s += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * s
}

/// Shoelace area of a bounded region.
pub fn polygon_area(r: &ConvexRegion2D) -> Result<f64> {
    match r.status {
        RegionStatus::Bounded => Ok(signed_area(&r.vertices).max(0.0)),
        RegionStatus::Empty => Ok(0.0),
        RegionStatus::Unbounded => Err(Error::NotBounded),
    }
}

/// Classifies `x` against the region with tolerance [`GEOM_TOL`].
pub fn point_in_region(r: &ConvexRegion2D, x: Point2) -> Result<Location> {
    if r.status == RegionStatus::Empty {
        return Err(Error::EmptyRegion);
    }
    if r.status == RegionStatus::Bounded && r.vertices.len() < 3 {
        let d = match r.vertices.len() {
            1 => dist(r.vertices[0], x),
            _ => segment_distance(r.vertices[0], r.vertices[1], x),
        };
        return Ok(if d <= GEOM_TOL { Location::Boundary } else { Location::Outside });
    }
    let worst = r.halfplanes.iter().map(|h| h.signed_distance(&x)).fold(f64::INFINITY, f64::min);
    Ok(if worst < -GEOM_TOL {
        Location::Outside
    } else if worst <= GEOM_TOL {
        Location::Boundary
    } else {
        Location::Inside
    })
}

pub(crate) fn dist(p: Point2, q: Point2) -> f64 {
    libm::hypot(p[0] - q[0], p[1] - q[1])
}

pub(crate) fn segment_distance(a: Point2, b: Point2, x: Point2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(a, x);
    }
    let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist([a[0] + t * d[0], a[1] + t * d[1]], x)
}

/// Euclidean distance from `x` to a bounded convex region (0 inside).
pub fn distance_to_region(r: &ConvexRegion2D, x: Point2) -> Result<f64> {
    match point_in_region(r, x)? {
        Location::Inside | Location::Boundary => Ok(0.0),
        Location::Outside => {
            if r.status != RegionStatus::Bounded {
                return Err(Error::NotBounded);
            }
            let m = r.vertices.len();
            Ok((0..m)
                .map(|i| segment_distance(r.vertices[i], r.vertices[(i + 1) % m], x))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

#[derive(Clone, Copy)]
struct Hp {
    n: Point2,
    c: f64,
    ang: f64,
    // index into the caller's list; `usize::MAX` marks the bounding box
    src: usize,
}

const BOX: usize = usize::MAX;

impl Hp {
    fn out(&self, p: Point2) -> bool {
        self.n[0] * p[0] + self.n[1] * p[1] - self.c < -GEOM_TOL
    }

    fn meet(&self, o: &Hp) -> Point2 {
        let det = self.n[0] * o.n[1] - self.n[1] * o.n[0];
        [(self.c * o.n[1] - o.c * self.n[1]) / det, (self.n[0] * o.c - o.n[0] * self.c) / det]
    }
}

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

const PARALLEL_EPS: f64 = 1e-12;

// A nonempty intersection is bounded iff no angular gap between normals reaches π.
fn normals_surround(hps: &[Hp]) -> bool {
    let mut ang: Vec<f64> = hps.iter().map(|h| h.ang).collect();
    ang.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let wrap = ang[0] + 2.0 * core::f64::consts::PI - ang[ang.len() - 1];
    let widest = ang.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    widest < core::f64::consts::PI - PARALLEL_EPS
}

// Guards against the deque producing a spurious point or sliver when the true intersection is empty.
fn feasible(hps: &[Hp], verts: &[Point2], reach: f64) -> bool {
    let tol = GEOM_TOL * (1.0 + reach);
    verts.iter().all(|&v| hps.iter().all(|h| h.n[0] * v[0] + h.n[1] * v[1] - h.c >= -tol))
}

/// Intersection of the closed upper halfspaces `{z : b'z ≥ a}` in the plane.
///
/// Sort-by-angle incremental construction with a double-ended queue. A far
/// bounding box detects unboundedness; facets touching it mark the region
/// [`RegionStatus::Unbounded`]. Vertices are always computed as exact
/// intersections of two generating lines.
pub fn intersect_halfplanes_2d(halfplanes: &[Hyperplane]) -> Result<ConvexRegion2D> {
    if halfplanes.is_empty() {
        return Err(Error::InvalidInput("empty halfplane list"));
    }
    let mut hps: Vec<Hp> = Vec::with_capacity(halfplanes.len() + 4);
    let mut reach = 0.0_f64;
    for (i, h) in halfplanes.iter().enumerate() {
        if h.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: h.dim() });
        }
        let s = norm(&h.b);
        let n = [h.b[0] / s, h.b[1] / s];
        let c = h.a / s;
        reach = reach.max(libm::fabs(c));
        hps.push(Hp { n, c, ang: libm::atan2(-n[0], n[1]), src: i });
    }
    let hps_in = hps.clone();
    if !normals_surround(&hps) {
        let r = 1e6 * (1.0 + reach);
        for n in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            hps.push(Hp { n, c: -r, ang: libm::atan2(-n[0], n[1]), src: BOX });
        }
    }
    hps.sort_by(|p, q| {
        p.ang.partial_cmp(&q.ang).unwrap_or(Ordering::Equal).then(q.c.partial_cmp(&p.c).unwrap_or(Ordering::Equal))
    });
    // (nearly) same direction: keep the most restrictive
    let mut uniq: Vec<Hp> = Vec::with_capacity(hps.len());
    for h in hps {
        if let Some(last) = uniq.last_mut() {
            if libm::fabs(cross(last.n, h.n)) < PARALLEL_EPS && last.n[0] * h.n[0] + last.n[1] * h.n[1] > 0.0 {
                if h.c > last.c {
                    *last = h;
                }
                continue;
            }
        }
        uniq.push(h);
    }
    if uniq.len() > 1 {
        let (first, last) = (uniq[0], uniq[uniq.len() - 1]);
        if libm::fabs(cross(first.n, last.n)) < PARALLEL_EPS && first.n[0] * last.n[0] + first.n[1] * last.n[1] > 0.0 {
            if last.c > first.c {
                uniq[0] = last;
            }
            uniq.pop();
        }
    }

    let mut dq: alloc::collections::VecDeque<Hp> = alloc::collections::VecDeque::with_capacity(uniq.len());
    for h in uniq {
        while dq.len() >= 2 && h.out(dq[dq.len() - 1].meet(&dq[dq.len() - 2])) {
            dq.pop_back();
        }
        while dq.len() >= 2 && h.out(dq[0].meet(&dq[1])) {
            dq.pop_front();
        }
        if let Some(back) = dq.back() {
            if libm::fabs(cross(h.n, back.n)) < PARALLEL_EPS {
                if h.n[0] * back.n[0] + h.n[1] * back.n[1] < 0.0 {
                    return Ok(ConvexRegion2D::empty());
                }
                let on_back = [back.n[0] * back.c, back.n[1] * back.c];
                if h.out(on_back) {
                    dq.pop_back();
                } else {
                    continue;
                }
            }
        }
        dq.push_back(h);
    }
    while dq.len() > 2 && dq[0].out(dq[dq.len() - 1].meet(&dq[dq.len() - 2])) {
        dq.pop_back();
    }
    while dq.len() > 2 && dq[dq.len() - 1].out(dq[0].meet(&dq[1])) {
        dq.pop_front();
    }
    if dq.len() < 3 {
        return Ok(ConvexRegion2D::empty());
    }

    // Drop facets whose edge has collapsed to a point.
    let mut facets: Vec<Hp> = dq.into_iter().collect();
    loop {
        let m = facets.len();
        if m < 3 {
            break;
        }
        let verts: Vec<Point2> = (0..m).map(|i| facets[i].meet(&facets[(i + 1) % m])).collect();
        // facet (i + 1) spans verts[i] -> verts[i + 1]
        let collapsed = (0..m).find(|&i| dist(verts[i], verts[(i + 1) % m]) < GEOM_TOL);
        match collapsed {
            Some(i) => {
                let drop = (i + 1) % m;
                // keep the box facet if a real one coincides with it; status decides later
                facets.remove(drop);
            }
            None => break,
        }
    }
    let m = facets.len();
    let unbounded = facets.iter().any(|f| f.src == BOX);
    if m < 3 {
        // degenerate: a point or a segment
        if unbounded || m < 2 {
            return Ok(ConvexRegion2D::empty());
        }
        let v = facets[0].meet(&facets[1 % m]);
        if !feasible(&hps_in, &[v], reach) {
            return Ok(ConvexRegion2D::empty());
        }
        return Ok(ConvexRegion2D {
            vertices: vec![v],
            halfplanes: facets.iter().map(|f| halfplanes[f.src].clone()).collect(),
            status: RegionStatus::Bounded,
        });
    }
    // rotate so that halfplanes()[i] spans vertices()[i] -> vertices()[i + 1]
    let verts: Vec<Point2> = (0..m).map(|i| facets[(i + m - 1) % m].meet(&facets[i])).collect();
    if unbounded {
        let mut keep_v = Vec::new();
        for i in 0..m {
            let prev = facets[(i + m - 1) % m];
            if prev.src != BOX && facets[i].src != BOX {
                keep_v.push(verts[i]);
            }
        }
        let hs = facets.iter().filter(|f| f.src != BOX).map(|f| halfplanes[f.src].clone()).collect();
        return Ok(ConvexRegion2D { vertices: keep_v, halfplanes: hs, status: RegionStatus::Unbounded });
    }
    if signed_area(&verts) < -GEOM_TOL || !feasible(&hps_in, &verts, reach) {
        return Ok(ConvexRegion2D::empty());
    }
    Ok(ConvexRegion2D {
        vertices: verts,
        halfplanes: facets.iter().map(|f| halfplanes[f.src].clone()).collect(),
        status: RegionStatus::Bounded,
    })
}

/// Area of `A △ B` for two bounded regions.
pub fn symmetric_difference_area(a: &ConvexRegion2D, b: &ConvexRegion2D) -> Result<f64> {
    let area_a = polygon_area(a)?;
    let area_b = polygon_area(b)?;
    let inter = if a.vertices.len() < 3 || b.vertices.len() < 3 {
        0.0
    } else {
        let mut hs = a.halfplanes.clone();
        hs.extend(b.halfplanes.iter().cloned());
        polygon_area(&intersect_halfplanes_2d(&hs)?)?
    };
    Ok((area_a + area_b - 2.0 * inter).max(0.0))
}

//! Envelope of u-orthogonal directional quantile halfspaces.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::{
    distance_to_region, equispaced_directions, intersect_halfplanes_2d, polygon_area, ConvexRegion2D, Direction,
    Hyperplane, RegionStatus, GEOM_TOL,
};
use crate::linalg::dot;
use crate::qr::check_tau;
use crate::{Error, PointCloud, Result};

/// Directions and order for [`km_envelope`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    k_directions: usize,
    tau: f64,
    phase: f64,
}

impl EnvelopeConfig {
    /// `k_directions ≥ 3` equispaced directions starting at angle 0.
    pub fn new(k_directions: usize, tau: f64) -> Result<Self> {
        if k_directions < 3 {
            return Err(Error::InvalidInput("need at least three directions"));
        }
        crate::qr::validate_tau(tau)?;
        Ok(EnvelopeConfig { k_directions, tau, phase: 0.0 })
    }

    /// Rotate every direction by `phase`.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Number of directions.
    pub fn k_directions(&self) -> usize {
        self.k_directions
    }

    /// Order τ.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Angle of the first direction.
    pub fn phase(&self) -> f64 {
        self.phase
    }
}

/// `{z : u'z = q}` where `q` is the `⌈nτ⌉`-th smallest projection `u'z_i`.
pub fn km_hyperplane(cloud: &PointCloud, tau: f64, u: &Direction) -> Result<Hyperplane> {
    if u.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), found: u.dim() });
    }
    let n = cloud.n();
    check_tau(n, tau)?;
    let mut proj: Vec<f64> = cloud.points().map(|z| dot(u.as_slice(), z)).collect();
    let m = libm::ceil(n as f64 * tau) as usize;
    let (_, q, _) = proj.select_nth_unstable_by(m - 1, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Hyperplane::new(u.as_slice().to_vec(), *q)
}

/// Intersection of the upper halfplanes of [`km_hyperplane`] over the configured directions.
pub fn km_envelope(cloud: &PointCloud, cfg: &EnvelopeConfig) -> Result<ConvexRegion2D> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: cloud.dim() });
    }
    check_tau(cloud.n(), cfg.tau)?;
    let hs = equispaced_directions(cfg.k_directions, cfg.phase)
        .iter()
        .map(|u| km_hyperplane(cloud, cfg.tau, u))
        .collect::<Result<Vec<_>>>()?;
    intersect_halfplanes_2d(&hs)
}

/// Quantitative comparison of an exact region with an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionComparison {
    /// Facets of the exact region.
    pub facets_exact: usize,
    /// Facets of the envelope.
    pub facets_km: usize,
    /// `area(km) - area(exact)`.
    pub area_gap: f64,
    /// Symmetric Hausdorff distance.
    pub hausdorff: f64,
    /// Every exact vertex lies in the envelope (within [`GEOM_TOL`]).
    pub km_contains_exact: bool,
}

fn directed_hausdorff(from: &ConvexRegion2D, to: &ConvexRegion2D) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &v in from.vertices() {
        worst = worst.max(distance_to_region(to, v)?);
    }
    Ok(worst)
}

/// Facet counts, area gap, Hausdorff distance and containment of two bounded regions.
pub fn compare_regions(exact: &ConvexRegion2D, km: &ConvexRegion2D) -> Result<RegionComparison> {
    if exact.status() != RegionStatus::Bounded || km.status() != RegionStatus::Bounded {
        return Err(Error::NotBounded);
    }
    let to_km = directed_hausdorff(exact, km)?;
    // distance to a convex polygon is convex, so vertices attain the maximum
    let hausdorff = to_km.max(directed_hausdorff(km, exact)?);
    Ok(RegionComparison {
        facets_exact: exact.facet_count(),
        facets_km: km.facet_count(),
        area_gap: polygon_area(km)? - polygon_area(exact)?,
        hausdorff,
        km_contains_exact: to_km <= GEOM_TOL,
    })
}

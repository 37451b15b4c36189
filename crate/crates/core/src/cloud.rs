//! Point clouds and general-position checks.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::{Error, Result};

/// `n` observations in `R^k`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    k: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Wraps row-major data; every entry must be finite.
    pub fn new(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::DimensionTooSmall { k });
        }
        if !data.len().is_multiple_of(k) {
            return Err(Error::DimensionMismatch { expected: k, found: data.len() % k });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("point coordinates must be finite"));
        }
        Ok(PointCloud { k, data })
    }

    /// Builds a planar cloud.
    pub fn from_points2(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(2, points.iter().flatten().copied().collect())
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.len() / self.k
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.k
    }

    /// Observation `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    /// Observation `i` of a planar cloud.
    pub fn point2(&self, i: usize) -> [f64; 2] {
        let p = self.point(i);
        [p[0], p[1]]
    }

    /// Iterator over observations.
    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.k)
    }

    /// Raw row-major storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Applies `z -> A z + t` (row-major `A`, `k x k`).
    pub fn affine(&self, a: &[f64], t: &[f64]) -> Result<Self> {
        let k = self.k;
        if a.len() != k * k || t.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: t.len() });
        }
        let mut out = Vec::with_capacity(self.data.len());
        for z in self.points() {
            for r in 0..k {
                out.push((0..k).map(|c| a[r * k + c] * z[c]).sum::<f64>() + t[r]);
            }
        }
        Self::new(k, out)
    }

    /// FNV-1a hash of the coordinates' bit patterns.
    pub fn fingerprint(&self) -> u64 {
        fingerprint(self.k as u64, &self.data)
    }

    /// Pairs of identical observations.
    pub fn duplicates(&self) -> Vec<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&i, &j| cmp_rows(self.point(i), self.point(j)));
        idx.windows(2)
            .filter(|w| self.point(w[0]) == self.point(w[1]))
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect()
    }

    /// First general-position violation found, if any: a duplicated pair, or
    /// (for `k = 2`) three collinear observations. Restricted to `rows`.
    pub fn general_position_violation_in(&self, rows: &[usize]) -> Option<Vec<usize>> {
        if let Some((i, j)) = self.duplicates().into_iter().find(|(i, j)| rows.contains(i) && rows.contains(j)) {
            return Some(alloc::vec![i, j]);
        }
        if self.k != 2 {
            return None;
        }
        find_collinear_triple(self, rows).map(|t| t.to_vec())
    }

    /// [`Self::general_position_violation_in`] over every observation.
    pub fn general_position_violation(&self) -> Option<Vec<usize>> {
        let rows: Vec<usize> = (0..self.n()).collect();
        self.general_position_violation_in(&rows)
    }
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn fingerprint(seed: u64, data: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for x in data {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Angular tolerance (radians) under which three points count as collinear.
pub const COLLINEAR_ANGLE_TOL: f64 = 1e-12;

/// `O(m² log m)` scan: for each anchor, sort the line angles (mod π) to later points.
fn find_collinear_triple(cloud: &PointCloud, rows: &[usize]) -> Option<[usize; 3]> {
    let mut angles: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for (pos, &i) in rows.iter().enumerate() {
        let p = cloud.point2(i);
        angles.clear();
        for &j in &rows[pos + 1..] {
            let q = cloud.point2(j);
            let mut a = libm::atan2(q[1] - p[1], q[0] - p[0]);
            if a < 0.0 {
                a += PI;
            }
            if a >= PI {
                a -= PI;
            }
            angles.push((a, j));
        }
        angles.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        for w in angles.windows(2) {
            if w[1].0 - w[0].0 < COLLINEAR_ANGLE_TOL {
                return Some(sorted3(i, w[0].1, w[1].1));
            }
        }
        if angles.len() >= 2 {
            let (first, last) = (angles[0], angles[angles.len() - 1]);
            if first.0 + PI - last.0 < COLLINEAR_ANGLE_TOL {
                return Some(sorted3(i, first.1, last.1));
            }
        }
    }
    None
}

fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shape_and_access() {
        let c = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]).unwrap();
        assert_eq!((c.n(), c.dim()), (3, 2));
        assert_eq!(c.point(2), &[0.5, 1.0]);
        assert!(PointCloud::new(2, vec![1.0, f64::NAN]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn detects_collinear_and_duplicates() {
        let c = PointCloud::from_points2(&[[0.0, 0.0], [3.0, 1.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert_eq!(c.general_position_violation(), Some(vec![0, 2, 3]));
        let d = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.5], [0.0, 0.0]]).unwrap();
        assert_eq!(d.general_position_violation(), Some(vec![0, 2]));
        let ok = PointCloud::from_points2(&[[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.4, 0.3]]).unwrap();
        assert_eq!(ok.general_position_violation(), None);
    }

    #[test]
    fn collinear_across_angle_wrap() {
        // vertical line: angles 0 and ~π after reduction are the same line
        let c = PointCloud::from_points2(&[[0.0, 0.0], [1.0, -1e-15], [-1.0, 0.0], [0.3, 2.0]]).unwrap();
        assert!(c.general_position_violation().is_some());
    }
}

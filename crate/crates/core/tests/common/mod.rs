#![allow(dead_code)]

use dirquant_core::geometry::{point_in_region, Location};
use dirquant_core::rng::SeededRng;
use dirquant_core::{ConvexRegion2D, PointCloud, RegionStatus};

pub fn uniform_cloud(seed: u64, n: usize, k: usize) -> PointCloud {
    let mut rng = SeededRng::new(seed);
    let data = (0..n * k).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    PointCloud::new(k, data).unwrap()
}

pub fn normal_cloud(seed: u64, n: usize, k: usize) -> PointCloud {
    let mut rng = SeededRng::new(seed);
    let data = (0..n * k).map(|_| rng.normal()).collect();
    PointCloud::new(k, data).unwrap()
}

pub fn rho(tau: f64, r: f64) -> f64 {
    if r < 0.0 {
        (tau - 1.0) * r
    } else {
        tau * r
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

/// Minimum check-loss objective over all exact-fit vertices.
pub fn brute_force_qr(y: &[f64], x: &[f64], p: usize, tau: f64) -> f64 {
    let n = y.len();
    let mut best = f64::INFINITY;
    for s in subsets(n, p) {
        let a: Vec<Vec<f64>> = s.iter().map(|&i| x[i * p..(i + 1) * p].to_vec()).collect();
        let b: Vec<f64> = s.iter().map(|&i| y[i]).collect();
        if let Some(beta) = solve_dense(a, b) {
            let obj: f64 = (0..n)
                .map(|i| {
                    let fit: f64 = (0..p).map(|j| x[i * p + j] * beta[j]).sum();
                    rho(tau, y[i] - fit)
                })
                .sum();
            best = best.min(obj);
        }
    }
    best
}

/// Every vertex of `inner` lies in `outer` up to `tol`.
pub fn vertices_inside(inner: &ConvexRegion2D, outer: &ConvexRegion2D, tol: f64) -> bool {
    if inner.status() == RegionStatus::Empty {
        return true;
    }
    if outer.status() == RegionStatus::Empty {
        return false;
    }
    inner.vertices().iter().all(|&v| {
        point_in_region(outer, v).unwrap() != Location::Outside
            || dirquant_core::geometry::distance_to_region(outer, v).unwrap() <= tol
    })
}

/// Greedy optimal pairing is exact here because matched vertices are far
/// closer to each other than to any other vertex.
pub fn vertex_sets_match(a: &ConvexRegion2D, b: &ConvexRegion2D, tol: f64) -> bool {
    let (va, vb) = (a.vertices(), b.vertices());
    if va.len() != vb.len() {
        return false;
    }
    va.iter().all(|p| vb.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) <= tol))
        && vb.iter().all(|p| va.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) <= tol))
}

mod common;

use common::{normal_cloud, rho, solve_dense, subsets, vertices_inside};
use dirquant_core::contour::{fixed_tau_region, sweep};
use dirquant_core::directional::tau_u_quantile;
use dirquant_core::geometry::polygon_area;
use dirquant_core::regression::{
    coverage_diagnostic, direction_grid, fixed_x_cut, regression_grid, regression_quantile, RegressionProblem,
    DEFAULT_GRID,
};
use dirquant_core::rng::SeededRng;
use dirquant_core::{Direction, Error, PointCloud, RegionStatus};
use proptest::prelude::*;

/// Minimum objective over hyperplanes through `k + q` observations, solving
/// `b'u = 1` and `b'y_i - c'x_i - a = 0` directly for `(b, c, a)`.
fn brute_force(rp: &RegressionProblem) -> f64 {
    let (n, k, q, tau) = (rp.n(), rp.k(), rp.n_regressors(), rp.tau());
    let u = rp.direction().as_slice();
    let dim = k + q + 1;
    let mut best = f64::INFINITY;
    for s in subsets(n, k + q) {
        let mut a = vec![u.iter().copied().chain(std::iter::repeat(0.0).take(q + 1)).collect::<Vec<f64>>()];
        for &i in &s {
            let mut row = rp.y_row(i).to_vec();
            row.extend(rp.x_row(i).iter().map(|v| -v));
            row.push(-1.0);
            a.push(row);
        }
        let mut rhs = vec![0.0; dim];
        rhs[0] = 1.0;
        if let Some(sol) = solve_dense(a, rhs) {
            let obj: f64 = (0..n)
                .map(|i| {
                    let r: f64 = (0..k).map(|j| sol[j] * rp.y_row(i)[j]).sum::<f64>()
                        - (0..q).map(|j| sol[k + j] * rp.x_row(i)[j]).sum::<f64>()
                        - sol[k + q];
                    rho(tau, r)
                })
                .sum();
            best = best.min(obj);
        }
    }
    best
}

fn linear_problem(seed: u64, n: usize, tau: f64, u: Direction) -> RegressionProblem {
    let mut rng = SeededRng::new(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 2.0)).collect();
    let mut y = Vec::with_capacity(2 * n);
    for xi in &x {
        y.push(xi + 0.3 * rng.normal());
        y.push(xi + 0.3 * rng.normal());
    }
    RegressionProblem::new(x, 1, y, 2, tau, u).unwrap()
}

#[test]
fn single_output_is_classical_regression() {
    for tau in [0.1, 0.25, 0.5, 0.9] {
        let rp = RegressionProblem::new(
            vec![0.0, 1.0, 2.0],
            1,
            vec![0.0, 2.0, 4.0],
            1,
            tau,
            Direction::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let q = regression_quantile(&rp).unwrap();
        assert_eq!(q.b, vec![1.0]);
        assert!((q.c[0] - 2.0).abs() < 1e-12 && q.a.abs() < 1e-12);
        assert_eq!((q.objective, q.lambda), (0.0, 0.0));
    }
}

#[test]
fn without_regressors_matches_location_bitwise() {
    for seed in 0..50u64 {
        let c = normal_cloud(seed, 17, 2);
        let u = Direction::from_angle(seed as f64 * 0.77);
        let rp = RegressionProblem::new(Vec::new(), 0, c.as_flat().to_vec(), 2, 0.27, u.clone()).unwrap();
        let r = regression_quantile(&rp).unwrap();
        let l = tau_u_quantile(&c, 0.27, &u).unwrap();
        assert_eq!(r.a.to_bits(), l.a.to_bits());
        assert_eq!(r.b, l.b);
        assert_eq!(r.lambda.to_bits(), l.lambda.to_bits());
        assert_eq!(r.fitted, l.fitted);
        assert!(r.c.is_empty());
    }
}

#[test]
fn solver_matches_enumeration() {
    for seed in 0..150u64 {
        let n = 6 + (seed % 7) as usize;
        let tau = [0.13, 0.37, 0.61][(seed % 3) as usize];
        let rp = linear_problem(seed, n, tau, Direction::from_angle(seed as f64 * 0.53));
        let q = regression_quantile(&rp).unwrap();
        assert!((q.objective - brute_force(&rp)).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn slope_in_projection_is_recovered() {
    let mut rng = SeededRng::new(11);
    let n = 400;
    let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
    let mut y = Vec::with_capacity(2 * n);
    for xi in &x {
        y.push(xi + 1e-3 * rng.uniform_in(-1.0, 1.0));
        y.push(-xi + 1e-3 * rng.uniform_in(-1.0, 1.0));
    }
    let rp = RegressionProblem::new(x, 1, y, 2, 0.3005, Direction::new(vec![1.0, 0.0]).unwrap()).unwrap();
    let q = regression_quantile(&rp).unwrap();
    // b'y = (b1 - b2) x + noise, so the slope seen by the fit is b1 - b2 = 1 - 2 b2
    assert!((q.b[0] - 1.0).abs() < 1e-12);
    assert!((q.c[0] - (q.b[0] - q.b[1])).abs() < 5e-3);
    assert!(q.lambda < 1e-3 * n as f64);
}

#[test]
fn regressor_shift_moves_only_the_intercept() {
    for seed in 0..40u64 {
        let rp = linear_problem(seed, 30, 0.31, Direction::from_angle(seed as f64));
        let t = SeededRng::new(seed).uniform_in(-3.0, 3.0);
        let shifted_x: Vec<f64> = (0..30).map(|i| rp.x_row(i)[0] + t).collect();
        let y: Vec<f64> = (0..30).flat_map(|i| rp.y_row(i).to_vec()).collect();
        let shifted = RegressionProblem::new(shifted_x, 1, y, 2, 0.31, rp.direction().clone()).unwrap();
        let (a, b) = (regression_quantile(&rp).unwrap(), regression_quantile(&shifted).unwrap());
        assert_eq!(a.fitted, b.fitted);
        assert!((b.a - (a.a - a.c[0] * t)).abs() < 1e-9);
        assert!((a.c[0] - b.c[0]).abs() < 1e-9);
        assert!((a.b[0] - b.b[0]).abs() < 1e-9 && (a.b[1] - b.b[1]).abs() < 1e-9);
        assert!((a.lambda - b.lambda).abs() < 1e-9);
    }
}

#[test]
fn cut_without_regressors_tracks_the_exact_region() {
    for seed in 0..10u64 {
        let c = normal_cloud(seed, 40, 2);
        let tau = 0.178;
        let rp =
            RegressionProblem::new(Vec::new(), 0, c.as_flat().to_vec(), 2, tau, Direction::from_angle(0.0)).unwrap();
        let models = regression_grid(&rp, &direction_grid(DEFAULT_GRID)).unwrap();
        let s = sweep(&c, tau).unwrap();
        for m in &models {
            let phi = m.u.as_slice()[1].atan2(m.u.as_slice()[0]);
            assert_eq!(m.fitted, s.at(phi).unwrap().fitted.to_vec());
        }
        let cut = fixed_x_cut(&models, &[]).unwrap();
        let exact = fixed_tau_region(&s).unwrap();
        assert!(vertices_inside(&exact, &cut, 1e-9));
        let dense = regression_grid(&rp, &direction_grid(3600)).unwrap();
        let fine = fixed_x_cut(&dense, &[]).unwrap();
        assert!(vertices_inside(&fine, &cut, 1e-9) && vertices_inside(&exact, &fine, 1e-9));
    }
}

#[test]
fn location_shift_moves_the_cut() {
    let rp = linear_problem(3, 300, 0.2005, Direction::from_angle(0.0));
    let models = regression_grid(&rp, &direction_grid(72)).unwrap();
    let (c0, c1) = (fixed_x_cut(&models, &[0.0]).unwrap(), fixed_x_cut(&models, &[1.0]).unwrap());
    let (m0, m1) = (c0.vertex_centroid().unwrap(), c1.vertex_centroid().unwrap());
    assert!((m1[0] - m0[0] - 1.0).abs() < 0.15 && (m1[1] - m0[1] - 1.0).abs() < 0.15);
}

#[test]
fn deep_order_gives_an_empty_cut() {
    let rp = linear_problem(8, 60, 0.4917, Direction::from_angle(0.0));
    let models = regression_grid(&rp, &direction_grid(90)).unwrap();
    assert_eq!(fixed_x_cut(&models, &[1.0]).unwrap().status(), RegionStatus::Empty);
}

#[test]
fn coverage_flags_curvature_only() {
    let tau = 0.3007;
    let n = 2000;
    let mut rng = SeededRng::new(21);
    let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
    let mut lin = Vec::with_capacity(2 * n);
    let mut quad = Vec::with_capacity(2 * n);
    for xi in &x {
        let (e1, e2) = (0.5 * rng.normal(), 0.5 * rng.normal());
        lin.extend([0.5 * xi + e1, -xi + e2]);
        quad.extend([xi * xi + e1, e2]);
    }
    let u = Direction::new(vec![1.0, 0.0]).unwrap();
    let rp = RegressionProblem::new(x.clone(), 1, lin, 2, tau, u.clone()).unwrap();
    let q = regression_quantile(&rp).unwrap();
    let rep = coverage_diagnostic(&rp, &q, 8).unwrap();
    assert!(!rep.any_flagged(), "{rep:?}");
    assert!(rep.global_deviation.abs() <= 3.0 / n as f64);

    let rp = RegressionProblem::new(x, 1, quad, 2, tau, u).unwrap();
    let q = regression_quantile(&rp).unwrap();
    let rep = coverage_diagnostic(&rp, &q, 8).unwrap();
    assert!(rep.any_flagged());
}

#[test]
fn mixed_and_undersized_inputs_are_rejected() {
    let rp = linear_problem(4, 20, 0.33, Direction::from_angle(0.0));
    let a = regression_quantile(&rp).unwrap();
    let other = linear_problem(5, 20, 0.33, Direction::from_angle(1.0));
    let b = regression_quantile(&other).unwrap();
    assert_eq!(fixed_x_cut(&[a.clone(), b], &[0.0]), Err(Error::MixedModels));
    assert!(matches!(coverage_diagnostic(&rp, &a, 5), Err(Error::TooFewPointsPerBin { count: 4, .. })));
    assert!(matches!(
        RegressionProblem::new(vec![0.0; 20], 1, vec![0.0; 40], 2, 0.25, Direction::from_angle(0.0)),
        Err(Error::DegenerateTau { .. })
    ));
}

#[test]
fn collinear_design_is_degenerate() {
    let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().flat_map(|v| [2.0 * v, -v]).collect();
    let rp = RegressionProblem::new(x, 1, y, 2, 0.3, Direction::from_angle(0.4)).unwrap();
    let e = regression_quantile(&rp).unwrap_err();
    assert!(matches!(e, Error::DegenerateData { .. } | Error::DegenerateDesign { .. }), "{e:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn coverage_bound_and_multiplier(seed in any::<u64>(), n in 8usize..40, q in 0usize..3, phi in 0.0f64..std::f64::consts::TAU, t in 0.05f64..0.95) {
        let tau = if (n as f64 * t).fract().abs() < 1e-6 { t + 0.001 } else { t };
        let mut rng = SeededRng::new(seed);
        let x: Vec<f64> = (0..n * q).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..2 * n).map(|_| rng.normal()).collect();
        let rp = RegressionProblem::new(x, q, y, 2, tau, Direction::from_angle(phi)).unwrap();
        let m = regression_quantile(&rp).unwrap();
        let u = rp.direction().as_slice();
        prop_assert!((m.b[0] * u[0] + m.b[1] * u[1] - 1.0).abs() < 1e-9);
        prop_assert_eq!(m.fitted.len(), 2 + q);
        let nt = n as f64 * tau;
        prop_assert!(m.counts.below as f64 <= nt && nt <= (m.counts.below + 2 + q) as f64);
        let direct: f64 = (0..n).map(|i| rho(tau, m.residual(rp.x_row(i), rp.y_row(i)))).sum();
        prop_assert!((m.lambda - direct).abs() < 1e-7);
        prop_assert!((m.lambda - m.objective).abs() < 1e-7);
        let below = (0..n).filter(|&i| m.residual(rp.x_row(i), rp.y_row(i)) < -1e-12).count();
        prop_assert_eq!(below, m.counts.below);
    }
}

#[test]
fn cut_of_location_data_equals_cloud_grid_envelope() {
    let c = PointCloud::from_points2(&[
        [0.0, 0.0],
        [1.0, 0.1],
        [0.4, 1.0],
        [-0.7, 0.6],
        [-0.2, -0.9],
        [0.8, -0.6],
        [0.1, 0.3],
    ])
    .unwrap();
    let rp = RegressionProblem::new(Vec::new(), 0, c.as_flat().to_vec(), 2, 0.2, Direction::from_angle(0.0)).unwrap();
    let models = regression_grid(&rp, &direction_grid(4000)).unwrap();
    let cut = fixed_x_cut(&models, &[]).unwrap();
    let exact = fixed_tau_region(&sweep(&c, 0.2).unwrap()).unwrap();
    assert_eq!(cut.status(), RegionStatus::Bounded);
    assert!(vertices_inside(&exact, &cut, 1e-9));
    let gap = polygon_area(&cut).unwrap() - polygon_area(&exact).unwrap();
    assert!((-1e-12..1e-2).contains(&gap), "{gap}");
}

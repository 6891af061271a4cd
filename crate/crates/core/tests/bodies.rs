//! Centroid bodies, Ball bodies and their comparisons.

mod common;

use common::*;
use tukeylab::bodies::*;
use tukeylab::depth::RegionOptions;
use tukeylab::linalg::Matrix;
use tukeylab::polytopes::RandomPolytope;
use tukeylab::*;

#[test]
fn centroid_supports_grow_in_p_and_stay_regular() {
    let spec = MeasureSpec::gaussian(2);
    let source = DepthSource::Spec(&spec);
    let grid = DirectionGrid::circle(32);
    let cal = calibrate_regularity(&source, &grid, &REGULARITY_LADDER).unwrap();
    for u in grid.iter() {
        let h: Vec<f64> = REGULARITY_LADDER.iter().map(|&p| zp_plus_support(&source, p, u).unwrap()).collect();
        for w in h.windows(2) {
            assert!(w[0] <= w[1] * (1.0 + 1e-10));
        }
        for &p in &REGULARITY_LADDER {
            let ratio = zp_plus_support(&source, 2.0 * p, u).unwrap() / zp_plus_support(&source, p, u).unwrap();
            assert!(ratio <= 2.0 * cal.alpha * (1.0 + 1e-10));
        }
    }
}

#[test]
fn cube_supports_match_quadrature() {
    let spec = MeasureSpec::cube(2);
    let source = DepthSource::Spec(&spec);
    for (theta, p) in [(0.3f64, 1.0), (1.1, 2.5), (2.0, 4.0)] {
        let u = [theta.cos(), theta.sin()];
        let integrand = |a: f64| simpson(|b: f64| (u[0] * a + u[1] * b).max(0.0).powf(p), -1.0, 1.0, 800);
        let oracle = (simpson(integrand, -1.0, 1.0, 800) / 4.0).powf(1.0 / p);
        let h = zp_plus_support(&source, p, &u).unwrap();
        assert!((h / oracle - 1.0).abs() < 1e-5, "h = {h}, oracle = {oracle}");
    }
}

#[test]
fn ball_bodies_nest_for_gaussians() {
    let spec = MeasureSpec::gaussian(2);
    let mut rng = rng(21);
    let orders = [1.0, 2.0, 2.0 + 2.0];
    for _ in 0..100 {
        let u = random_direction(&mut rng, 2);
        let rho: Vec<f64> = orders.iter().map(|&p| ball_body_radial(&spec, p, &u).unwrap()).collect();
        assert!(rho[0] <= rho[1] * (1.0 + 1e-12) && rho[1] <= rho[2] * (1.0 + 1e-12));
    }
}

#[test]
fn moment_identity_for_the_gaussian() {
    let spec = MeasureSpec::gaussian(2);
    let mut rng = rng(22);
    let dirs: Vec<Vec<f64>> = (0..20_000).map(|_| random_direction(&mut rng, 2)).collect();
    let xi = [0.6, 0.8];
    for p in [1.0, 2.0] {
        let q = 2.0 + p;
        let lhs: f64 = dirs
            .iter()
            .map(|u| ball_body_radial(&spec, q, u).unwrap().powf(q) * (u[0] * xi[0] + u[1] * xi[1]).max(0.0).powf(p))
            .sum::<f64>()
            * 2.0
            * std::f64::consts::PI
            / q
            / dirs.len() as f64;
        let rhs = 2.0 * std::f64::consts::PI * gauss_positive_moment(p);
        assert!((lhs / rhs - 1.0).abs() < 0.02, "p = {p}: {lhs} vs {rhs}");
    }
}

#[test]
fn centroid_support_factors_through_the_normalized_ball_body() {
    let spec = MeasureSpec::gaussian(2);
    let f0 = spec.density(&[0.0, 0.0]).unwrap();
    for p in [1.0, 2.0] {
        let q = 2.0 + p;
        let radius = ball_body_radial(&spec, q, &[1.0, 0.0]).unwrap();
        let vol = std::f64::consts::PI * radius * radius;
        let normalized = MeasureSpec::ball(2, radius / vol.sqrt()).unwrap();
        let u = [0.6, 0.8];
        let h_mu = zp_plus_support(&DepthSource::Spec(&spec), p, &u).unwrap();
        let h_bar = zp_plus_support(&DepthSource::Spec(&normalized), p, &u).unwrap();
        let predicted = h_bar * vol.powf(1.0 / p + 0.5) * f0.powf(1.0 / p);
        assert!((h_mu / predicted - 1.0).abs() < 0.02, "p = {p}: {h_mu} vs {predicted}");
    }
}

#[test]
fn centroid_bodies_of_unit_volume_bodies_are_not_small() {
    let mut worst = f64::INFINITY;
    for n in [2usize, 3] {
        let ball_radius = (1.0 / tukeylab::numeric::unit_ball_volume(n)).powf(1.0 / n as f64);
        let half = Matrix::from_rows(&(0..n).map(|i| (0..n).map(|j| if i == j { 0.5 } else { 0.0 }).collect()).collect::<Vec<_>>()).unwrap();
        let bodies = [MeasureSpec::ball(n, ball_radius).unwrap(), MeasureSpec::cube(n).with_affine(half, vec![0.0; n]).unwrap()];
        let grid = if n == 2 { DirectionGrid::circle(128) } else { DirectionGrid::fibonacci(200) };
        for spec in &bodies {
            for p in 1..=n {
                let z = zp_plus_body(&DepthSource::Spec(spec), p as f64, &grid).unwrap();
                let vol = if n == 2 {
                    z.inner_area().unwrap()
                } else {
                    RandomPolytope::from_vertices(z.boundary_points.clone(), false).unwrap().volume_mc(6000, 1).unwrap().0
                };
                let c = vol.powf(1.0 / n as f64) / (p as f64 / n as f64).sqrt();
                worst = worst.min(c);
            }
        }
    }
    assert!(worst >= 0.05, "smallest recorded constant {worst}");
}

#[test]
fn ladder_on_a_coarse_grid() {
    let spec = MeasureSpec::gaussian(2);
    let grid = DirectionGrid::circle(64);
    let opts = RegionOptions { search: RadialSearch::with_rel_tol(1e-6), ..Default::default() };
    let r = body_ladder(&spec, 3.0, (std::f64::consts::PI).sqrt() / 2.0, &grid, &opts).unwrap();
    assert!(r.all_certified());
    assert!(r.constant.unwrap() <= 20.0);
}

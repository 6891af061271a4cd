//! Reference values computed independently of the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Standard normal upper tail `P(g >= t)` by quadrature of the density.
pub fn gauss_tail(t: f64) -> f64 {
    let pdf = |s: f64| (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if t < 0.0 {
        return 1.0 - gauss_tail(-t);
    }
    simpson(pdf, t, t + 40.0, 40_000)
}

/// `t` with `gauss_tail(t) = q`, by bisection.
pub fn gauss_tail_inverse(q: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gauss_tail(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Uniform random unit vector in `R^n`.
pub fn random_direction(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|c| c / r).collect();
        }
    }
}

/// Planar half-space depth by enumerating one direction inside every arc
/// cut out by the normals of `X_i - x`.
pub fn brute_depth_2d(points: &[[f64; 2]], x: [f64; 2]) -> usize {
    let mut angles = Vec::new();
    for p in points {
        let (dx, dy) = (p[0] - x[0], p[1] - x[1]);
        if dx != 0.0 || dy != 0.0 {
            let a = dy.atan2(dx);
            angles.push(a + std::f64::consts::FRAC_PI_2);
            angles.push(a - std::f64::consts::FRAC_PI_2);
        }
    }
    if angles.is_empty() {
        return points.len();
    }
    let tau = std::f64::consts::TAU;
    let mut angles: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(tau)).collect();
    angles.sort_by(f64::total_cmp);
    let count = |t: f64| {
        let u = [t.cos(), t.sin()];
        points.iter().filter(|p| (p[0] - x[0]) * u[0] + (p[1] - x[1]) * u[1] >= 0.0).count()
    };
    let mut best = usize::MAX;
    for i in 0..angles.len() {
        let a = angles[i];
        let b = if i + 1 < angles.len() { angles[i + 1] } else { angles[0] + tau };
        if b - a > 1e-12 {
            best = best.min(count(0.5 * (a + b)));
        }
    }
    if best == usize::MAX {
        best = count(angles[0] + 0.5);
    }
    best
}

/// Probability that the origin misses the hull of `n` symmetric points in
/// general position in the plane.
pub fn planar_origin_miss(n: u32) -> f64 {
    n as f64 / 2f64.powi(n as i32 - 1)
}

/// `E g_+^p` for a standard normal `g`, via quadrature.
pub fn gauss_positive_moment(p: f64) -> f64 {
    let pdf = |s: f64| s.powf(p) * (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
    simpson(pdf, 0.0, 40.0, 40_000)
}

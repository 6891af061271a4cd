//! Reproducible direction grids on the unit sphere.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, normalized};
use crate::rng::task_rng;

/// A finite set of unit directions in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
}

impl DirectionGrid {
    /// Default grid: equally spaced angles in 2D, a Fibonacci sphere in 3D,
    /// seeded Gaussian-normalized directions above that. In 1D, `{+1, -1}`.
    pub fn new(dim: usize, m: usize, seed: u64) -> Self {
        match dim {
            1 => Self { dim, directions: vec![vec![1.0], vec![-1.0]] },
            2 => Self::circle(m),
            3 => Self::fibonacci(m),
            _ => Self::random(dim, m, seed),
        }
    }

    pub fn circle(m: usize) -> Self {
        let directions = (0..m)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Self { dim: 2, directions }
    }

    pub fn fibonacci(m: usize) -> Self {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let directions = (0..m)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let t = golden * i as f64;
                vec![r * t.cos(), r * t.sin(), z]
            })
            .collect();
        Self { dim: 3, directions }
    }

    pub fn random(dim: usize, m: usize, seed: u64) -> Self {
        let mut rng = task_rng(seed, 0x6772_6964);
        let mut directions = Vec::with_capacity(m);
        while directions.len() < m {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Some(u) = normalized(&g) {
                directions.push(u);
            }
        }
        Self { dim, directions }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.directions.iter()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self
                .directions
                .iter()
                .zip(&other.directions)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12))
    }

    /// Angular covering radius: exact for the circle, estimated by probing
    /// random directions otherwise.
    pub fn covering_angle(&self) -> f64 {
        if self.dim == 1 {
            return 0.0;
        }
        if self.dim == 2 {
            return std::f64::consts::PI / self.len() as f64;
        }
        let probes = Self::random(self.dim, 4000, 0x636f_7665);
        let mut worst: f64 = 0.0;
        for p in probes.iter() {
            let best = self.iter().map(|u| dot(u, p)).fold(-1.0, f64::max);
            worst = worst.max(best.clamp(-1.0, 1.0).acos());
        }
        // probing underestimates the maximum gap
        1.5 * worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn grids_are_unit_and_reproducible() {
        for dim in 2..=5 {
            let g = DirectionGrid::new(dim, 200, 3);
            assert_eq!(g.len(), 200);
            assert!(g.iter().all(|u| (norm(u) - 1.0).abs() < 1e-12));
            assert!(g.same_as(&DirectionGrid::new(dim, 200, 3)));
        }
    }

    #[test]
    fn circle_covering_angle() {
        let g = DirectionGrid::circle(256);
        assert!((g.covering_angle() - std::f64::consts::PI / 256.0).abs() < 1e-15);
    }
}

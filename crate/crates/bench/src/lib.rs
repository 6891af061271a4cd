//! Shared fixtures for the kernel benchmarks.

use tukeylab::{MeasureSpec, PointCloud};

/// A Gaussian sample of `count` points in dimension `dim`, fixed by `seed`.
pub fn gaussian_cloud(dim: usize, count: usize, seed: u64) -> PointCloud {
    MeasureSpec::gaussian(dim).sample(count, seed).expect("gaussian sampling cannot fail")
}

/// A point at distance `radius` along the first axis.
pub fn probe(dim: usize, radius: f64) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = radius;
    x
}

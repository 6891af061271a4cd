//! Small dense vector and matrix helpers on `f64` slices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let r = norm(a);
    if r > 0.0 && r.is_finite() {
        Some(scale(a, 1.0 / r))
    } else {
        None
    }
}

pub fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

/// Row-major square matrix with an affine-map friendly API.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpec("affine matrix must be square and non-empty".into()));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x)).collect()
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[j] += self.get(i, j) * x[i];
            }
        }
        out
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn determinant(&self) -> f64 {
        self.to_dmatrix().determinant()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .to_dmatrix()
            .try_inverse()
            .ok_or_else(|| Error::InvalidSpec("affine matrix is singular".into()))?;
        let mut data = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                data.push(inv[(i, j)]);
            }
        }
        Ok(Self { n: self.n, data })
    }
}

/// Numerical rank of a set of row vectors after centering at their mean.
pub fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let n = points[0].len();
    let m = points.len();
    let mut mean = vec![0.0; n];
    for p in points {
        for k in 0..n {
            mean[k] += p[k] / m as f64;
        }
    }
    let mat = DMatrix::from_fn(m, n, |i, j| points[i][j] - mean[j]);
    let svd = mat.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|&&s| s > tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let inv = a.inverse().unwrap();
        let x = vec![0.3, -1.2];
        let y = inv.apply(&a.apply(&x));
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
        assert!((a.determinant() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn transpose_matches_rows() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.apply_transpose(&[1.0, 0.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn rank_of_collinear_points() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(affine_rank(&pts, 1e-10), 1);
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(affine_rank(&tri, 1e-10), 2);
    }
}

//! Random polytopes `K_N = conv{X_i}` and `S_N = conv{+-X_i}`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::convex::hull_2d;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalized};
use crate::lp::{LpOutcome, StandardLp};
use crate::measures::MeasureSpec;
use crate::rng::{derive_seed, task_rng};

/// Residual tolerance for convex-combination certificates, relative to the
/// size of the generators.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPolytope {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// When set, the generators are `+-vertices`.
    pub symmetric: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec: Option<MeasureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    Inside,
    /// `<x, separator> > max_i <g_i, separator>` by `margin`.
    Outside { separator: Vec<f64>, margin: f64 },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull2d {
    /// Counter-clockwise extreme points.
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub degenerate: bool,
}

impl RandomPolytope {
    pub fn from_vertices(vertices: Vec<Vec<f64>>, symmetric: bool) -> Result<Self> {
        let dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        if dim == 0 || vertices.iter().any(|v| v.len() != dim || v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("polytope needs finite vertices of one positive dimension".into()));
        }
        Ok(Self { dim, vertices, symmetric, seed: None, spec: None })
    }

    pub fn from_cloud(cloud: &PointCloud, symmetric: bool) -> Self {
        Self { dim: cloud.dim(), vertices: cloud.to_rows(), symmetric, seed: Some(cloud.seed), spec: None }
    }

    /// `K_N` (or `S_N` when `symmetric`) from `n_points` draws of `spec`.
    pub fn sample(spec: &MeasureSpec, n_points: usize, symmetric: bool, seed: u64) -> Result<Self> {
        let cloud = spec.sample(n_points, seed)?;
        let mut p = Self::from_cloud(&cloud, symmetric);
        p.spec = Some(spec.clone());
        Ok(p)
    }

    pub fn generators(&self) -> Vec<Vec<f64>> {
        let mut g = self.vertices.clone();
        if self.symmetric {
            g.extend(self.vertices.iter().map(|v| v.iter().map(|c| -c).collect::<Vec<_>>()));
        }
        g
    }

    /// `max <g, u>` over the generators.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| {
                let s = dot(v, u);
                if self.symmetric {
                    s.abs()
                } else {
                    s
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn scale(&self) -> f64 {
        self.vertices.iter().map(|v| norm(v)).fold(1.0, f64::max)
    }

    /// Decides `x in conv(generators)` by phase-1 simplex on the convex
    /// combination system. Outside verdicts carry a validated separator.
    pub fn membership(&self, x: &[f64]) -> Result<Membership> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let gens = self.generators();
        let n = self.dim;
        let cols = gens.len();
        let rows = n + 1;
        let mut a = vec![0.0; rows * cols];
        for (j, g) in gens.iter().enumerate() {
            for k in 0..n {
                a[k * cols + j] = g[k];
            }
            a[n * cols + j] = 1.0;
        }
        let mut b = x.to_vec();
        b.push(1.0);
        let lp = StandardLp { rows, cols, a, b, c: vec![0.0; cols] };
        let scale = self.scale().max(norm(x));
        match lp.solve()? {
            LpOutcome::Optimal { x: weights, .. } => {
                let mut resid = vec![0.0; n];
                for (w, g) in weights.iter().zip(&gens) {
                    for k in 0..n {
                        resid[k] += w * g[k];
                    }
                }
                let err = resid.iter().zip(x).map(|(r, t)| (r - t).abs()).fold(0.0, f64::max);
                let total: f64 = weights.iter().sum();
                if err > MEMBERSHIP_TOL * scale || (total - 1.0).abs() > MEMBERSHIP_TOL {
                    return Err(Error::SolverFailure(format!("convex weights leave residual {err:e}")));
                }
                Ok(Membership::Inside)
            }
            LpOutcome::Infeasible { farkas } => {
                let w = &farkas[..n];
                let u = normalized(w).ok_or_else(|| Error::SolverFailure("zero Farkas direction".into()))?;
                let margin = dot(x, &u) - self.support(&u);
                if margin > 0.0 {
                    Ok(Membership::Outside { separator: u, margin })
                } else if margin >= -MEMBERSHIP_TOL * scale {
                    // on the boundary up to tolerance
                    Ok(Membership::Inside)
                } else {
                    Err(Error::SolverFailure("Farkas separator failed validation".into()))
                }
            }
            LpOutcome::Unbounded => Err(Error::SolverFailure("feasibility program reported unbounded".into())),
        }
    }

    pub fn hull_2d(&self) -> Result<Hull2d> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim });
        }
        let (vertices, area) = hull_2d(&self.generators());
        Ok(Hull2d { degenerate: vertices.len() < 3 || area == 0.0, vertices, area })
    }

    pub fn area_2d(&self) -> Result<f64> {
        Ok(self.hull_2d()?.area)
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let gens = self.generators();
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for g in &gens {
            for k in 0..self.dim {
                lo[k] = lo[k].min(g[k]);
                hi[k] = hi[k].max(g[k]);
            }
        }
        (lo, hi)
    }

    /// Hit-or-miss volume over the bounding box: `(estimate, std error)`.
    /// The budget is split across workers with derived seeds.
    pub fn volume_mc(&self, budget: usize, seed: u64) -> Result<(f64, f64)> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument("volume_mc needs dimension at least 2".into()));
        }
        let (lo, hi) = self.bounding_box();
        let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        if box_vol <= 0.0 {
            return Ok((0.0, 0.0));
        }
        const CHUNK: usize = 4096;
        let chunks = budget.div_ceil(CHUNK).max(1);
        let hits: usize = (0..chunks)
            .into_par_iter()
            .map(|c| -> Result<usize> {
                use rand::Rng;
                let mut rng = task_rng(derive_seed(seed, 0x76_6f6c), c as u64);
                let count = CHUNK.min(budget - c * CHUNK);
                let mut hits = 0;
                let mut x = vec![0.0; self.dim];
                for _ in 0..count {
                    for k in 0..self.dim {
                        x[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
                    }
                    if self.membership(&x)?.is_inside() {
                        hits += 1;
                    }
                }
                Ok(hits)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        let m = budget as f64;
        let frac = hits as f64 / m;
        Ok((box_vol * frac, box_vol * (frac * (1.0 - frac) / m).sqrt()))
    }

    /// `(E_sigma h(u)^q)^{1/q}` over uniform directions.
    pub fn w_q(&self, q: f64, sphere_budget: usize, seed: u64) -> Result<f64> {
        if q == 0.0 || !q.is_finite() {
            return Err(Error::InvalidArgument("w_q needs a finite nonzero q".into()));
        }
        let mut rng = task_rng(derive_seed(seed, 0x7771), 0);
        let mut acc = 0.0;
        let scale = self.scale();
        for _ in 0..sphere_budget {
            let g: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let Some(u) = normalized(&g) else { continue };
            let h = self.support(&u);
            if q < 0.0 && h <= 1e-12 * scale {
                return Err(Error::Precondition("w_q with q < 0 needs the origin in the interior".into()));
            }
            acc += h.powf(q);
        }
        Ok((acc / sphere_budget as f64).powf(1.0 / q))
    }
}

/// Probability that the origin misses the hull of `n_points` symmetric
/// atomless points in general position in `R^dim`.
pub fn wendel_miss_probability(dim: usize, n_points: usize) -> f64 {
    let m = n_points - 1;
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..dim.min(n_points) {
        if k > 0 {
            binom *= (m + 1 - k) as f64 / k as f64;
        }
        total += binom;
    }
    (total * 0.5f64.powi(m as i32)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> RandomPolytope {
        RandomPolytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]], false)
            .unwrap()
    }

    #[test]
    fn square_membership() {
        let sq = RandomPolytope::from_vertices(
            vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]],
            false,
        )
        .unwrap();
        assert!(sq.membership(&[0.0, 0.0]).unwrap().is_inside());
        match sq.membership(&[2.0, 0.0]).unwrap() {
            Membership::Outside { separator, margin } => {
                assert!(separator[0] > 0.99 && margin > 0.0);
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn averages_of_generators_are_inside() {
        let g = MeasureSpec::gaussian(3);
        let p = RandomPolytope::sample(&g, 20, false, 4).unwrap();
        let x: Vec<f64> = (0..3).map(|k| (0..4).map(|i| p.vertices[i][k]).sum::<f64>() / 4.0).collect();
        assert!(p.membership(&x).unwrap().is_inside());
        for v in &p.vertices {
            assert!(p.membership(v).unwrap().is_inside());
        }
    }

    #[test]
    fn points_just_beyond_the_support_are_outside() {
        let p = RandomPolytope::sample(&MeasureSpec::gaussian(2), 30, false, 5).unwrap();
        let mut rng = task_rng(6, 0);
        for _ in 0..50 {
            let g: Vec<f64> = (0..2).map(|_| StandardNormal.sample(&mut rng)).collect();
            let u = normalized(&g).unwrap();
            let touching = p.vertices.iter().max_by(|a, b| dot(a, &u).total_cmp(&dot(b, &u))).unwrap();
            let beyond: Vec<f64> = touching.iter().zip(&u).map(|(a, b)| a + 1e-3 * p.scale() * b).collect();
            assert!(!p.membership(&beyond).unwrap().is_inside());
        }
    }

    #[test]
    fn symmetric_support_is_even() {
        let p = RandomPolytope::sample(&MeasureSpec::cube(3), 10, true, 2).unwrap();
        let u = normalized(&[0.2, -0.5, 0.9]).unwrap();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        assert_eq!(p.support(&u), p.support(&neg));
    }

    #[test]
    fn hull_areas() {
        assert!((square().area_2d().unwrap() - 1.0).abs() < 1e-15);
        let tri = RandomPolytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], false).unwrap();
        assert_eq!(tri.area_2d().unwrap(), 0.5);
        let line = RandomPolytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]], false).unwrap();
        assert!(line.hull_2d().unwrap().degenerate);
        let disk = RandomPolytope::sample(&MeasureSpec::ball(2, 1.0).unwrap(), 1000, false, 1).unwrap();
        assert!((disk.area_2d().unwrap() - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.05);
    }

    #[test]
    fn mc_volumes() {
        let corners: Vec<Vec<f64>> = (0..8)
            .map(|m| (0..3).map(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let cube = RandomPolytope::from_vertices(corners, false).unwrap();
        let (v, se) = cube.volume_mc(2000, 1).unwrap();
        assert!((v - 8.0).abs() <= 3.0 * se + 1e-12);
        let cross = RandomPolytope::from_vertices(
            (0..3).map(|k| crate::linalg::unit(3, k)).collect(),
            true,
        )
        .unwrap();
        let (v, se) = cross.volume_mc(20_000, 2).unwrap();
        assert!((v - 4.0 / 3.0).abs() <= 3.0 * se, "{v} {se}");
        let flat = RandomPolytope::from_vertices(
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            false,
        )
        .unwrap();
        assert_eq!(flat.volume_mc(1000, 3).unwrap().0, 0.0);
    }

    #[test]
    fn mean_width_of_square() {
        let sq = RandomPolytope::from_vertices(
            vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]],
            false,
        )
        .unwrap();
        let w1 = sq.w_q(1.0, 200_000, 1).unwrap();
        assert!((w1 - 4.0 / std::f64::consts::PI).abs() < 5e-3);
        assert!(w1 <= sq.w_q(2.0, 200_000, 1).unwrap());
        assert!(square().w_q(-1.0, 100, 1).is_err());
    }

    #[test]
    fn wendel_small_cases() {
        assert_eq!(wendel_miss_probability(1, 2), 0.5);
        assert_eq!(wendel_miss_probability(2, 3), 0.75);
        assert!((wendel_miss_probability(2, 4) - 0.5).abs() < 1e-15);
    }
}

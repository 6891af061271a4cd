//! Probability measures on `R^n`: sampling, densities, half-space masses,
//! and log-Laplace transforms.
//!
//! Every family is described in "base" coordinates. An optional invertible
//! affine map `x -> A x + b` pushes the base measure forward; all queries
//! pull their arguments back through that map.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalized, Matrix};
use crate::numeric::{self, Quadrature};
use crate::rng::{derive_seed, task_rng, TaskRng};

/// Default number of draws behind Monte Carlo half-space masses.
pub const DEFAULT_MC_BUDGET: usize = 200_000;

/// Consecutive rejected proposals after which a body counts as degenerate.
const REJECTION_WINDOW: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum BodyShape {
    Ball { radius: f64 },
    /// `{x : <normals_i, x> <= offsets_i}` with every offset positive.
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    GaussianStd,
    /// Uniform on `[-1, 1]^n`.
    UniformCube,
    UniformBody(BodyShape),
    ProductCauchy,
    ProductQStable { q: f64 },
    SConcavePareto { kappa: f64 },
    Empirical(PointCloud),
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::GaussianStd => "gaussian_std",
            Family::UniformCube => "uniform_cube",
            Family::UniformBody(_) => "uniform_body",
            Family::ProductCauchy => "product_cauchy",
            Family::ProductQStable { .. } => "product_qstable",
            Family::SConcavePareto { .. } => "sconcave_pareto",
            Family::Empirical(_) => "empirical",
        }
    }

    fn heavy_tailed(&self) -> bool {
        matches!(self, Family::ProductCauchy | Family::ProductQStable { .. } | Family::SConcavePareto { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Affine {
    pub matrix: Matrix,
    pub shift: Vec<f64>,
    inverse: Matrix,
    abs_det: f64,
}

impl Affine {
    pub fn new(matrix: Matrix, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != matrix.n {
            return Err(Error::InvalidSpec("affine shift length differs from matrix size".into()));
        }
        if matrix.data.iter().chain(&shift).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("affine map has non-finite entries".into()));
        }
        let inverse = matrix.inverse()?;
        let abs_det = matrix.determinant().abs();
        if abs_det == 0.0 || !abs_det.is_finite() {
            return Err(Error::InvalidSpec("affine matrix is singular".into()));
        }
        Ok(Self { matrix, shift, inverse, abs_det })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.apply(x);
        y.iter_mut().zip(&self.shift).for_each(|(a, b)| *a += b);
        y
    }

    pub fn pull_back(&self, y: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = y.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        self.inverse.apply(&d)
    }
}

impl PartialEq for Affine {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.shift == other.shift
    }
}

/// Which queries a measure can answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub density: bool,
    pub log_laplace: bool,
    /// Centrally symmetric about the origin.
    pub symmetric: bool,
    pub log_concave: bool,
}

/// A half-space mass, with the standard error of its estimator (zero for
/// exact and quadrature paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl MassEstimate {
    fn exact(value: f64) -> Self {
        Self { value: value.clamp(0.0, 1.0), std_error: 0.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.std_error == 0.0
    }
}

/// Log-Laplace value with gradient and row-major Hessian.
#[derive(Debug, Clone)]
pub struct LaplaceEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

#[derive(Debug, Default)]
struct PolytopeCache {
    bbox: OnceLock<Result<(Vec<f64>, Vec<f64>)>>,
    sample: OnceLock<Result<(PointCloud, f64)>>,
}

/// A sampleable probability measure.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    family: Family,
    dim: usize,
    affine: Option<Affine>,
    mc_budget: usize,
    cache: Arc<PolytopeCache>,
}

impl PartialEq for MeasureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.dim == other.dim && self.affine == other.affine
    }
}

impl MeasureSpec {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        validate_family(&family, dim)?;
        let spec = Self { family, dim, affine: None, mc_budget: DEFAULT_MC_BUDGET, cache: Arc::default() };
        if let Family::UniformBody(BodyShape::Polytope { .. }) = spec.family {
            spec.polytope_bbox()?;
        }
        Ok(spec)
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(Family::GaussianStd, dim).expect("dimension must be positive")
    }

    pub fn cube(dim: usize) -> Self {
        Self::new(Family::UniformCube, dim).expect("dimension must be positive")
    }

    pub fn cauchy(dim: usize) -> Self {
        Self::new(Family::ProductCauchy, dim).expect("dimension must be positive")
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(Family::UniformBody(BodyShape::Ball { radius }), dim)
    }

    pub fn polytope_body(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let dim = normals.first().map(|r| r.len()).unwrap_or(0);
        Self::new(Family::UniformBody(BodyShape::Polytope { normals, offsets }), dim)
    }

    pub fn qstable(dim: usize, q: f64) -> Result<Self> {
        Self::new(Family::ProductQStable { q }, dim)
    }

    pub fn pareto(dim: usize, kappa: f64) -> Result<Self> {
        Self::new(Family::SConcavePareto { kappa }, dim)
    }

    pub fn empirical(cloud: PointCloud) -> Self {
        let dim = cloud.dim();
        Self::new(Family::Empirical(cloud), dim).expect("clouds are validated on construction")
    }

    /// Pushes this measure forward under `x -> A x + b`, composing with any
    /// map already present.
    pub fn with_affine(mut self, matrix: Matrix, shift: Vec<f64>) -> Result<Self> {
        if matrix.n != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: matrix.n });
        }
        let composed = match &self.affine {
            None => Affine::new(matrix, shift)?,
            Some(inner) => {
                let rows: Vec<Vec<f64>> = (0..self.dim)
                    .map(|i| {
                        let col = |j: usize| (0..self.dim).map(|k| inner.matrix.get(k, j)).collect::<Vec<_>>();
                        (0..self.dim).map(|j| dot(&matrix.data[i * self.dim..(i + 1) * self.dim], &col(j))).collect()
                    })
                    .collect();
                let mut b = matrix.apply(&inner.shift);
                b.iter_mut().zip(&shift).for_each(|(a, s)| *a += s);
                Affine::new(Matrix::from_rows(&rows)?, b)?
            }
        };
        self.affine = Some(composed);
        Ok(self)
    }

    /// Budget for the internal Monte Carlo sample used by families without
    /// closed-form masses.
    pub fn with_mc_budget(mut self, budget: usize) -> Self {
        self.mc_budget = budget.max(1000);
        self.cache = Arc::default();
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn affine(&self) -> Option<&Affine> {
        self.affine.as_ref()
    }

    pub fn mc_budget(&self) -> usize {
        self.mc_budget
    }

    fn shift_is_zero(&self) -> bool {
        self.affine.as_ref().is_none_or(|a| a.shift.iter().all(|v| *v == 0.0))
    }

    fn base_symmetric(&self) -> bool {
        match &self.family {
            Family::UniformBody(BodyShape::Polytope { .. }) | Family::Empirical(_) => false,
            _ => true,
        }
    }

    pub fn capabilities(&self) -> Capabilities {
        let f = &self.family;
        Capabilities {
            density: !matches!(f, Family::ProductQStable { .. } | Family::Empirical(_)),
            log_laplace: !f.heavy_tailed(),
            symmetric: self.base_symmetric() && self.shift_is_zero(),
            log_concave: matches!(f, Family::GaussianStd | Family::UniformCube | Family::UniformBody(_)),
        }
    }

    /// Center of central symmetry, when the family has one.
    pub fn center_of_symmetry(&self) -> Option<Vec<f64>> {
        if !self.base_symmetric() {
            return None;
        }
        Some(self.affine.as_ref().map(|a| a.shift.clone()).unwrap_or_else(|| vec![0.0; self.dim]))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: len });
        }
        Ok(())
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::Unsupported { op, family: self.family.tag().to_string() }
    }

    // ----- sampling -------------------------------------------------------

    /// `count` i.i.d. draws, deterministic in `(self, count, seed)`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<PointCloud> {
        if count == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        let mut rng = task_rng(seed, 0);
        let mut data = Vec::with_capacity(count * self.dim);
        let mut buf = vec![0.0; self.dim];
        for _ in 0..count {
            self.draw_base(&mut rng, &mut buf)?;
            match &self.affine {
                Some(a) => data.extend(a.apply(&buf)),
                None => data.extend_from_slice(&buf),
            }
        }
        Ok(PointCloud::from_flat(self.dim, data, seed))
    }

    fn draw_base(&self, rng: &mut TaskRng, out: &mut [f64]) -> Result<()> {
        match &self.family {
            Family::GaussianStd => out.iter_mut().for_each(|v| *v = StandardNormal.sample(rng)),
            Family::UniformCube => out.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0)),
            Family::ProductCauchy => out.iter_mut().for_each(|v| *v = stable_variate(rng, 1.0)),
            Family::ProductQStable { q } => out.iter_mut().for_each(|v| *v = stable_variate(rng, *q)),
            Family::SConcavePareto { kappa } => {
                let beta = Beta::new(self.dim as f64, *kappa).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                let t: f64 = beta.sample(rng);
                let radius = t / (1.0 - t);
                let dir = random_direction(rng, self.dim);
                out.iter_mut().zip(dir).for_each(|(v, d)| *v = radius * d);
            }
            Family::Empirical(cloud) => {
                let i = rng.random_range(0..cloud.len());
                out.copy_from_slice(cloud.point(i));
            }
            Family::UniformBody(shape) => {
                let (lo, hi) = match shape {
                    BodyShape::Ball { radius } => (vec![-radius; self.dim], vec![*radius; self.dim]),
                    BodyShape::Polytope { .. } => self.polytope_bbox()?,
                };
                rejection_draw(rng, &lo, &hi, out, |x| self.base_body_contains(x))?;
            }
        }
        Ok(())
    }

    fn base_body_contains(&self, x: &[f64]) -> bool {
        match &self.family {
            Family::UniformBody(BodyShape::Ball { radius }) => dot(x, x) <= radius * radius,
            Family::UniformBody(BodyShape::Polytope { normals, offsets }) => {
                normals.iter().zip(offsets).all(|(a, b)| dot(a, x) <= *b)
            }
            Family::UniformCube => x.iter().all(|v| v.abs() <= 1.0),
            _ => true,
        }
    }

    fn polytope_bbox(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let Family::UniformBody(BodyShape::Polytope { normals, offsets }) = &self.family else {
            return Err(self.unsupported("polytope bounding box"));
        };
        self.cache
            .bbox
            .get_or_init(|| {
                let mut lo = vec![0.0; self.dim];
                let mut hi = vec![0.0; self.dim];
                for k in 0..self.dim {
                    for (sign, slot) in [(1.0, &mut hi), (-1.0, &mut lo)] {
                        let mut c = vec![0.0; self.dim];
                        c[k] = sign;
                        let x = crate::lp::maximize_over_halfspaces(normals, offsets, &c)?
                            .ok_or_else(|| Error::InvalidSpec("uniform_body polytope is unbounded".into()))?;
                        slot[k] = x[k];
                    }
                }
                Ok((lo, hi))
            })
            .clone()
    }

    /// Fixed internal sample (base coordinates) with a volume estimate of the
    /// body from the rejection acceptance rate.
    fn polytope_sample(&self) -> Result<&(PointCloud, f64)> {
        let entry = self.cache.sample.get_or_init(|| {
            let (lo, hi) = self.polytope_bbox()?;
            let mut rng = task_rng(derive_seed(0x706f_6c79, self.mc_budget as u64), 0);
            let mut data = Vec::with_capacity(self.mc_budget * self.dim);
            let mut buf = vec![0.0; self.dim];
            let mut attempts = 0u64;
            for _ in 0..self.mc_budget {
                attempts += rejection_draw(&mut rng, &lo, &hi, &mut buf, |x| self.base_body_contains(x))?;
                data.extend_from_slice(&buf);
            }
            let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let vol = box_vol * self.mc_budget as f64 / attempts as f64;
            Ok((PointCloud::from_flat(self.dim, data, 0), vol))
        });
        entry.as_ref().map_err(Clone::clone)
    }

    /// The atoms of an empirical spec, pushed forward by the affine map.
    pub fn empirical_points(&self) -> Option<PointCloud> {
        let Family::Empirical(cloud) = &self.family else { return None };
        Some(match &self.affine {
            None => cloud.clone(),
            Some(a) => {
                let data = cloud.rows().flat_map(|r| a.apply(r)).collect();
                PointCloud::from_flat(self.dim, data, cloud.seed)
            }
        })
    }

    /// The fixed Monte Carlo sample behind polytope-body estimates, in
    /// image coordinates.
    pub(crate) fn internal_sample(&self) -> Result<PointCloud> {
        let (cloud, _) = self.polytope_sample()?;
        Ok(match &self.affine {
            None => cloud.clone(),
            Some(a) => PointCloud::from_flat(self.dim, cloud.rows().flat_map(|r| a.apply(r)).collect(), 0),
        })
    }

    fn base_body_volume(&self) -> Result<f64> {
        match &self.family {
            Family::UniformBody(BodyShape::Ball { radius }) => {
                Ok(numeric::unit_ball_volume(self.dim) * radius.powi(self.dim as i32))
            }
            Family::UniformBody(BodyShape::Polytope { normals, offsets }) => match self.dim {
                1 | 2 => {
                    let (lo, hi) = self.polytope_bbox()?;
                    Ok(if self.dim == 1 { hi[0] - lo[0] } else { crate::convex::clipped_polygon_area(normals, offsets, &lo, &hi) })
                }
                _ => Ok(self.polytope_sample()?.1),
            },
            Family::UniformCube => Ok(2f64.powi(self.dim as i32)),
            _ => Err(self.unsupported("body volume")),
        }
    }

    fn abs_det(&self) -> f64 {
        self.affine.as_ref().map(|a| a.abs_det).unwrap_or(1.0)
    }

    fn pull_back(&self, y: &[f64]) -> Vec<f64> {
        match &self.affine {
            Some(a) => a.pull_back(y),
            None => y.to_vec(),
        }
    }

    // ----- density --------------------------------------------------------

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let z = self.pull_back(x);
        Ok(self.base_density(&z)? / self.abs_det())
    }

    fn base_density(&self, z: &[f64]) -> Result<f64> {
        let n = self.dim as f64;
        Ok(match &self.family {
            Family::GaussianStd => (-0.5 * dot(z, z)).exp() / (2.0 * PI).powf(n / 2.0),
            Family::UniformCube | Family::UniformBody(_) => {
                if self.base_body_contains(z) {
                    1.0 / self.base_body_volume()?
                } else {
                    0.0
                }
            }
            Family::ProductCauchy => z.iter().map(|v| 1.0 / (PI * (1.0 + v * v))).product(),
            Family::SConcavePareto { kappa } => {
                pareto_normalizer(self.dim, *kappa) * (1.0 + norm(z)).powf(-(n + kappa))
            }
            Family::ProductQStable { .. } | Family::Empirical(_) => return Err(self.unsupported("density")),
        })
    }

    /// `sup f`, for families with a bounded density.
    pub fn density_sup(&self) -> Result<f64> {
        let z0 = vec![0.0; self.dim];
        let base = match &self.family {
            Family::UniformBody(BodyShape::Polytope { .. }) => 1.0 / self.base_body_volume()?,
            _ => self.base_density(&z0)?,
        };
        Ok(base / self.abs_det())
    }

    // ----- half-space masses ----------------------------------------------

    /// `mu({x : <x, u> >= t})` for a unit vector `u`.
    pub fn halfspace_mass(&self, u: &[f64], t: f64) -> Result<MassEstimate> {
        self.check_dim(u.len())?;
        let un = norm(u);
        if (un - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("direction must be a unit vector (|u| = {un})")));
        }
        if t.is_nan() {
            return Err(Error::InvalidArgument("threshold is NaN".into()));
        }
        match &self.affine {
            None => self.base_mass(u, t),
            Some(a) => {
                let v = a.matrix.apply_transpose(u);
                self.base_mass(&v, t - dot(&a.shift, u))
            }
        }
    }

    /// Base-coordinate mass of `{<z, v> >= t}` for a nonzero `v`.
    fn base_mass(&self, v: &[f64], t: f64) -> Result<MassEstimate> {
        if let Family::Empirical(cloud) = &self.family {
            let count = cloud.rows().filter(|x| dot(x, v) >= t).count();
            return Ok(MassEstimate::exact(count as f64 / cloud.len() as f64));
        }
        let vn = norm(v);
        let u: Vec<f64> = v.iter().map(|x| x / vn).collect();
        let s = t / vn;
        Ok(match &self.family {
            Family::GaussianStd => MassEstimate::exact(numeric::normal_sf(s)),
            Family::UniformCube => MassEstimate::exact(cube_tail(&u, s)),
            Family::UniformBody(BodyShape::Ball { radius }) => MassEstimate::exact(ball_tail(self.dim, s / radius)),
            Family::UniformBody(BodyShape::Polytope { .. }) => {
                let (sample, _) = self.polytope_sample()?;
                let hits = sample.rows().filter(|x| dot(x, &u) >= s).count();
                let m = sample.len() as f64;
                let p = hits as f64 / m;
                MassEstimate { value: p, std_error: (p * (1.0 - p) / m).sqrt().max(0.5 / m) }
            }
            Family::ProductCauchy => {
                let scale: f64 = u.iter().map(|x| x.abs()).sum();
                MassEstimate::exact(0.5 - (s / scale).atan() / PI)
            }
            Family::ProductQStable { q } => {
                let scale = u.iter().map(|x| x.abs().powf(*q)).sum::<f64>().powf(1.0 / q);
                MassEstimate::exact(stable_tail(*q, s / scale))
            }
            Family::SConcavePareto { kappa } => MassEstimate::exact(pareto_tail(self.dim, *kappa, s)),
            Family::Empirical(_) => unreachable!(),
        })
    }

    /// Largest value of `<x, u>` over the support, when the support is
    /// bounded. May overestimate for polytope bodies.
    pub fn support_extent(&self, u: &[f64]) -> Option<f64> {
        let (v, off) = match &self.affine {
            None => (u.to_vec(), 0.0),
            Some(a) => (a.matrix.apply_transpose(u), dot(&a.shift, u)),
        };
        let base = match &self.family {
            Family::UniformCube => v.iter().map(|x| x.abs()).sum(),
            Family::UniformBody(BodyShape::Ball { radius }) => radius * norm(&v),
            Family::UniformBody(BodyShape::Polytope { .. }) => {
                let (lo, hi) = self.polytope_bbox().ok()?;
                v.iter().zip(lo.iter().zip(&hi)).map(|(c, (l, h))| (c * l).max(c * h)).sum()
            }
            Family::Empirical(cloud) => cloud.rows().map(|x| dot(x, &v)).fold(f64::NEG_INFINITY, f64::max),
            _ => return None,
        };
        Some(base + off)
    }

    // ----- log-Laplace ----------------------------------------------------

    pub fn log_laplace(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.log_laplace_full(xi)?.value)
    }

    /// `Lambda(xi)` together with its gradient and Hessian.
    pub fn log_laplace_full(&self, xi: &[f64]) -> Result<LaplaceEval> {
        self.check_dim(xi.len())?;
        let n = self.dim;
        let Some(a) = &self.affine else {
            return self.base_laplace(xi);
        };
        let w = a.matrix.apply_transpose(xi);
        let base = self.base_laplace(&w)?;
        let mut gradient = a.matrix.apply(&base.gradient);
        gradient.iter_mut().zip(&a.shift).for_each(|(g, b)| *g += b);
        // A H A^T
        let mut ah = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                ah[i * n + j] = (0..n).map(|k| a.matrix.get(i, k) * base.hessian[k * n + j]).sum();
            }
        }
        let mut hessian = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hessian[i * n + j] = (0..n).map(|k| ah[i * n + k] * a.matrix.get(j, k)).sum();
            }
        }
        Ok(LaplaceEval { value: dot(xi, &a.shift) + base.value, gradient, hessian })
    }

    fn base_laplace(&self, xi: &[f64]) -> Result<LaplaceEval> {
        let n = self.dim;
        if self.family.heavy_tailed() {
            if xi.iter().all(|v| *v == 0.0) {
                return Ok(LaplaceEval { value: 0.0, gradient: vec![0.0; n], hessian: vec![0.0; n * n] });
            }
            return Err(Error::InfiniteLogLaplace(self.family.tag().to_string()));
        }
        match &self.family {
            Family::GaussianStd => {
                let mut hessian = vec![0.0; n * n];
                (0..n).for_each(|i| hessian[i * n + i] = 1.0);
                Ok(LaplaceEval { value: 0.5 * dot(xi, xi), gradient: xi.to_vec(), hessian })
            }
            Family::UniformCube => {
                let mut hessian = vec![0.0; n * n];
                (0..n).for_each(|i| hessian[i * n + i] = numeric::ln_sinhc_second(xi[i]));
                Ok(LaplaceEval {
                    value: xi.iter().map(|v| numeric::ln_sinhc(*v)).sum(),
                    gradient: xi.iter().map(|v| numeric::ln_sinhc_prime(*v)).collect(),
                    hessian,
                })
            }
            Family::UniformBody(BodyShape::Ball { radius }) => Ok(ball_laplace(n, *radius, xi)),
            Family::UniformBody(BodyShape::Polytope { .. }) => Ok(cloud_laplace(&self.polytope_sample()?.0, xi)),
            Family::Empirical(cloud) => Ok(cloud_laplace(cloud, xi)),
            _ => unreachable!(),
        }
    }

    /// Barycenter of the measure.
    pub fn barycenter(&self) -> Result<Vec<f64>> {
        let base = match &self.family {
            Family::ProductCauchy => return Err(self.unsupported("barycenter")),
            Family::ProductQStable { q } if *q <= 1.0 => return Err(self.unsupported("barycenter")),
            Family::Empirical(cloud) => cloud.mean(),
            Family::UniformBody(BodyShape::Polytope { .. }) => self.polytope_sample()?.0.mean(),
            _ => vec![0.0; self.dim],
        };
        Ok(match &self.affine {
            Some(a) => a.apply(&base),
            None => base,
        })
    }

    /// A point of (approximately) maximal Tukey depth.
    pub fn center_point(&self) -> Result<Vec<f64>> {
        if let Some(c) = self.center_of_symmetry() {
            return Ok(c);
        }
        let best = crate::depth::max_depth(&crate::depth::DepthSource::Spec(self), &Default::default())?;
        Ok(best.point)
    }
}

fn validate_family(family: &Family, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    match family {
        Family::ProductQStable { q } if !(1.0..2.0).contains(q) => {
            Err(Error::InvalidSpec(format!("product_qstable needs q in [1, 2), got {q}")))
        }
        Family::SConcavePareto { kappa } if !(*kappa > 1.0 && kappa.is_finite()) => {
            Err(Error::InvalidSpec(format!("sconcave_pareto needs kappa > 1, got {kappa}")))
        }
        Family::UniformBody(BodyShape::Ball { radius }) if !(*radius > 0.0 && radius.is_finite()) => {
            Err(Error::InvalidSpec("ball radius must be positive".into()))
        }
        Family::UniformBody(BodyShape::Polytope { normals, offsets }) => {
            if normals.is_empty() || normals.len() != offsets.len() {
                return Err(Error::InvalidSpec("polytope needs matching normals and offsets".into()));
            }
            if normals.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
                return Err(Error::InvalidSpec("polytope normals must be finite vectors of the body dimension".into()));
            }
            if offsets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                return Err(Error::InvalidSpec("polytope offsets must be positive (origin in the interior)".into()));
            }
            Ok(())
        }
        Family::Empirical(cloud) if cloud.dim() != dim => {
            Err(Error::DimensionMismatch { expected: dim, got: cloud.dim() })
        }
        _ => Ok(()),
    }
}

fn random_direction(rng: &mut TaskRng, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalized(&g) {
            return u;
        }
    }
}

/// Fills `out` with a uniform point of `{inside}` drawn from the box
/// `[lo, hi]`; returns the number of proposals used.
fn rejection_draw(
    rng: &mut TaskRng,
    lo: &[f64],
    hi: &[f64],
    out: &mut [f64],
    inside: impl Fn(&[f64]) -> bool,
) -> Result<u64> {
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        for ((v, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *v = a + (b - a) * rng.random::<f64>();
        }
        if inside(out) {
            return Ok(attempts);
        }
        if attempts >= REJECTION_WINDOW {
            return Err(Error::DegenerateBody("rejection sampler acceptance fell below 1e-6".into()));
        }
    }
}

/// Symmetric alpha-stable variate with characteristic function
/// `exp(-|t|^alpha)` (Chambers-Mallows-Stuck, skewness zero).
pub fn stable_variate(rng: &mut TaskRng, alpha: f64) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `P(S >= s)` for the symmetric alpha-stable law of `stable_variate`.
pub fn stable_tail(alpha: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.5;
    }
    if s < 0.0 {
        return 1.0 - stable_tail(alpha, -s);
    }
    if alpha == 1.0 {
        return 0.5 - s.atan() / PI;
    }
    let e = alpha / (alpha - 1.0);
    let scale = s.powf(e);
    let integrand = |theta: f64| {
        if theta <= 0.0 {
            return 0.0;
        }
        let c = theta.cos();
        let v = (c / (alpha * theta).sin()).powf(e) * ((alpha - 1.0) * theta).cos() / c;
        let x = (-scale * v).exp();
        if x.is_finite() {
            x
        } else {
            0.0
        }
    };
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-11, max_depth: 40 }.integrate(integrand, 0.0, PI / 2.0) / PI
}

/// `P(<U, u> >= t)` for `U` uniform on `[-1, 1]^n`, via the box-spline CDF
/// of a sum of scaled uniforms. Coordinates whose inclusion would make the
/// alternating sum numerically unstable are dropped; their effect on the
/// result is second order away from the kinks.
fn cube_tail(u: &[f64], t: f64) -> f64 {
    let mut a: Vec<f64> = u.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    let total: f64 = a.iter().sum();
    if t >= total {
        return 0.0;
    }
    if t <= -total {
        return 1.0;
    }
    if t == 0.0 {
        return 0.5;
    }
    let w0 = total - t.abs();
    let mut kept: Vec<f64> = Vec::with_capacity(a.len());
    let mut prod = 1.0;
    let mut fact = 1.0;
    for &ai in &a {
        let c = 2.0 * ai;
        let m = kept.len() + 1;
        let bound = f64::EPSILON * 2f64.powi(m as i32) * w0.powi(m as i32) / (fact * m as f64 * prod * c);
        if !kept.is_empty() && bound > 1e-13 {
            break;
        }
        kept.push(c);
        prod *= c;
        fact *= m as f64;
    }
    let m = kept.len();
    let w = kept.iter().sum::<f64>() / 2.0 - t.abs();
    let lower = if w <= 0.0 {
        0.0
    } else {
        let mut acc = 0.0;
        for mask in 0u32..(1u32 << m) {
            let shift: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| kept[k]).sum();
            let d = w - shift;
            if d > 0.0 {
                let term = d.powi(m as i32);
                acc += if mask.count_ones() % 2 == 0 { term } else { -term };
            }
        }
        (acc / (fact * prod)).clamp(0.0, 0.5)
    };
    if t > 0.0 {
        lower
    } else {
        1.0 - lower
    }
}

/// `P(<X, u> >= s)` for `X` uniform on the unit ball of `R^n`.
fn ball_tail(n: usize, s: f64) -> f64 {
    if s >= 1.0 {
        return 0.0;
    }
    if s <= -1.0 {
        return 1.0;
    }
    let half = 0.5 * numeric::beta_reg((n as f64 + 1.0) / 2.0, 0.5, 1.0 - s * s);
    if s >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// `P(theta_1 >= s)` for `theta` uniform on the unit sphere of `R^n`.
fn sphere_tail(n: usize, s: f64) -> f64 {
    if s > 1.0 {
        return 0.0;
    }
    if s < -1.0 {
        return 1.0;
    }
    if n == 1 {
        return if s <= -1.0 { 1.0 } else { 0.5 };
    }
    let half = 0.5 * numeric::beta_reg((n as f64 - 1.0) / 2.0, 0.5, (1.0 - s * s).max(0.0));
    if s >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Normalizing constant of `(1 + |x|)^{-(n + kappa)}` on `R^n`:
/// `1 / (n omega_n B(n, kappa))`.
pub fn pareto_normalizer(n: usize, kappa: f64) -> f64 {
    let ln_surface = (n as f64).ln() + numeric::unit_ball_volume(n).ln();
    (-(ln_surface + numeric::ln_beta(n as f64, kappa))).exp()
}

/// Radius law: `R = T / (1 - T)` with `T ~ Beta(n, kappa)`.
fn pareto_tail(n: usize, kappa: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    if t < 0.0 {
        return 1.0 - pareto_tail(n, kappa, -t);
    }
    if n == 1 {
        return 0.5 * (1.0 + t).powf(-kappa);
    }
    let nf = n as f64;
    let ln_b = numeric::ln_beta(nf, kappa);
    let tau0 = t / (1.0 + t);
    let integrand = |tau: f64| {
        if tau <= 0.0 || tau >= 1.0 {
            return 0.0;
        }
        let dens = ((nf - 1.0) * tau.ln() + (kappa - 1.0) * (1.0 - tau).ln() - ln_b).exp();
        dens * sphere_tail(n, t * (1.0 - tau) / tau)
    };
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-11, max_depth: 40 }.integrate(integrand, tau0, 1.0).clamp(0.0, 0.5)
}

/// Log-Laplace of the uniform measure on a ball, through the 1D marginal
/// `psi(s) = ln E exp(s S)` with `S` the first coordinate.
fn ball_laplace(n: usize, radius: f64, xi: &[f64]) -> LaplaceEval {
    let r = norm(xi);
    let s = radius * r;
    let expo = (n as f64 - 1.0) / 2.0;
    let quad = Quadrature { abs_tol: 1e-14, rel_tol: 1e-12, max_depth: 40 };
    let weight = |z: f64| (1.0 - z * z).max(0.0).powf(expo);
    let moments = |k: i32| quad.integrate(|z| weight(z) * z.powi(k) * (s * (z - 1.0)).exp(), -1.0, 1.0);
    let norm_c = quad.integrate(weight, -1.0, 1.0);
    let (m0, m1, m2) = (moments(0), moments(1), moments(2));
    let psi = s + (m0 / norm_c).ln();
    let d1 = m1 / m0;
    let d2 = (m2 / m0 - d1 * d1).max(0.0);
    let mut hessian = vec![0.0; n * n];
    if r < 1e-12 {
        let var = radius * radius / (n as f64 + 2.0);
        (0..n).for_each(|i| hessian[i * n + i] = var);
        return LaplaceEval { value: 0.0, gradient: vec![0.0; n], hessian };
    }
    let dir: Vec<f64> = xi.iter().map(|v| v / r).collect();
    let radial = radius * radius * d2;
    let tangential = radius * d1 / r;
    for i in 0..n {
        for j in 0..n {
            let outer = dir[i] * dir[j];
            hessian[i * n + j] = radial * outer + tangential * (if i == j { 1.0 } else { 0.0 } - outer);
        }
    }
    LaplaceEval { value: psi, gradient: dir.iter().map(|d| radius * d1 * d).collect(), hessian }
}

/// Log-Laplace of the uniform measure on the points of a cloud.
fn cloud_laplace(cloud: &PointCloud, xi: &[f64]) -> LaplaceEval {
    let n = cloud.dim();
    let vals: Vec<f64> = cloud.rows().map(|x| dot(x, xi)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    for (x, v) in cloud.rows().zip(&vals) {
        let w = (v - max).exp();
        total += w;
        for i in 0..n {
            first[i] += w * x[i];
            for j in 0..n {
                second[i * n + j] += w * x[i] * x[j];
            }
        }
    }
    let gradient: Vec<f64> = first.iter().map(|g| g / total).collect();
    let hessian = (0..n * n).map(|k| second[k] / total - gradient[k / n] * gradient[k % n]).collect();
    LaplaceEval { value: max + (total / cloud.len() as f64).ln(), gradient, hessian }
}

// ----- JSON schema ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    family: String,
    dim: usize,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    affine: Option<AffineRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "shape", rename_all = "snake_case")]
enum BodyParams {
    Ball { radius: f64 },
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QParams {
    q: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KappaParams {
    kappa: f64,
}

fn params<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    let v = if v.is_null() { json!({}) } else { v };
    serde_json::from_value(v).map_err(|e| Error::InvalidSpec(format!("bad params: {e}")))
}

impl TryFrom<SpecRepr> for MeasureSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "gaussian_std" => params::<NoParams>(r.params).map(|_| Family::GaussianStd)?,
            "uniform_cube" => params::<NoParams>(r.params).map(|_| Family::UniformCube)?,
            "product_cauchy" => params::<NoParams>(r.params).map(|_| Family::ProductCauchy)?,
            "product_qstable" => Family::ProductQStable { q: params::<QParams>(r.params)?.q },
            "sconcave_pareto" => Family::SConcavePareto { kappa: params::<KappaParams>(r.params)?.kappa },
            "uniform_body" => Family::UniformBody(match params::<BodyParams>(r.params)? {
                BodyParams::Ball { radius } => BodyShape::Ball { radius },
                BodyParams::Polytope { normals, offsets } => BodyShape::Polytope { normals, offsets },
            }),
            "empirical" => Family::Empirical(params::<PointCloud>(r.params)?),
            other => return Err(Error::InvalidSpec(format!("unknown family {other:?}"))),
        };
        let spec = MeasureSpec::new(family, r.dim)?;
        match r.affine {
            None => Ok(spec),
            Some(a) => {
                if a.a.len() != r.dim {
                    return Err(Error::DimensionMismatch { expected: r.dim, got: a.a.len() });
                }
                spec.with_affine(Matrix::from_rows(&a.a)?, a.b)
            }
        }
    }
}

impl From<&MeasureSpec> for SpecRepr {
    fn from(s: &MeasureSpec) -> Self {
        let params = match &s.family {
            Family::GaussianStd | Family::UniformCube | Family::ProductCauchy => json!({}),
            Family::ProductQStable { q } => json!({ "q": q }),
            Family::SConcavePareto { kappa } => json!({ "kappa": kappa }),
            Family::UniformBody(BodyShape::Ball { radius }) => json!({ "shape": "ball", "radius": radius }),
            Family::UniformBody(BodyShape::Polytope { normals, offsets }) => {
                json!({ "shape": "polytope", "normals": normals, "offsets": offsets })
            }
            Family::Empirical(cloud) => serde_json::to_value(cloud).unwrap_or(Value::Null),
        };
        SpecRepr {
            family: s.family.tag().to_string(),
            dim: s.dim,
            params,
            affine: s.affine.as_ref().map(|a| AffineRepr { a: a.matrix.rows(), b: a.shift.clone() }),
        }
    }
}

impl Serialize for MeasureSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeasureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SpecRepr::deserialize(deserializer)?;
        MeasureSpec::try_from(repr).map_err(serde::de::Error::custom)
    }
}

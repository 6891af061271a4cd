//! Tukey half-space depth: exact sweeps for planar clouds, bracketed
//! direction search for general measures, and depth level sets.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::convex::{ConvexBodyApprox, RadialSearch};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::linalg::{dot, norm, normalized, sub};
use crate::measures::{BodyShape, Family, MeasureSpec};
use crate::numeric;

/// Relative slack used when comparing a depth against a level `e^{-p}`.
pub const LEVEL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMethod {
    Exact2d,
    /// Closed-form depth (Gaussian and its affine images).
    ClosedForm,
    /// Grid search with a rigorous lower bracket from a Lipschitz modulus.
    DirectionGrid,
    /// The lower bracket is heuristic.
    McBracket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: DepthMethod,
    pub directions_used: usize,
    /// Normal of the lightest half-space found, when one was tracked.
    pub direction: Option<Vec<f64>>,
}

impl DepthEstimate {
    fn exact(value: f64, method: DepthMethod, directions_used: usize, direction: Option<Vec<f64>>) -> Self {
        Self { lower: value, upper: value, method, directions_used, direction }
    }

    /// True when `lower` is backed by an exact or rigorous computation.
    pub fn is_certified(&self) -> bool {
        self.method != DepthMethod::McBracket
    }
}

/// How hard `depth_analytic` searches the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectionBudget {
    /// Grid size; zero selects 256 in the plane and 1024 otherwise.
    pub directions: usize,
    /// Number of best grid directions refined by local descent.
    pub refine_starts: usize,
    pub seed: u64,
}

impl Default for DirectionBudget {
    fn default() -> Self {
        Self { directions: 0, refine_starts: 3, seed: 0 }
    }
}

impl DirectionBudget {
    pub fn grid_size(&self, dim: usize) -> usize {
        match (self.directions, dim) {
            (0, 2) => 256,
            (0, _) => 1024,
            (m, _) => m,
        }
    }

    pub fn grid(&self, dim: usize) -> DirectionGrid {
        DirectionGrid::new(dim, self.grid_size(dim), self.seed)
    }

    /// The search grid with its covering angle, memoized per process.
    fn prepared(&self, dim: usize) -> Arc<(DirectionGrid, f64)> {
        type Cache = Mutex<HashMap<(usize, usize, u64), Arc<(DirectionGrid, f64)>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (dim, self.grid_size(dim), self.seed);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().expect("grid cache poisoned").get(&key) {
            return hit.clone();
        }
        let grid = self.grid(dim);
        let gap = grid.covering_angle();
        let entry = Arc::new((grid, gap));
        cache.lock().expect("grid cache poisoned").entry(key).or_insert(entry).clone()
    }
}

/// Where depth values come from.
#[derive(Debug, Clone, Copy)]
pub enum DepthSource<'a> {
    Spec(&'a MeasureSpec),
    Cloud(&'a PointCloud),
}

impl DepthSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            DepthSource::Spec(s) => s.dim(),
            DepthSource::Cloud(c) => c.dim(),
        }
    }
}

// ----- exact planar sweep ---------------------------------------------------

fn half(d: &[f64; 2]) -> u8 {
    if d[1] > 0.0 || (d[1] == 0.0 && d[0] > 0.0) {
        0
    } else {
        1
    }
}

#[inline]
fn cross2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn angle_cmp(a: &[f64; 2], b: &[f64; 2]) -> Ordering {
    half(a).cmp(&half(b)).then_with(|| 0.0.partial_cmp(&cross2(a, b)).unwrap_or(Ordering::Equal))
}

/// Exact depth of `x` with respect to a planar cloud, in `O(N log N)`.
/// Points equal to `x` lie in every closed half-plane through `x`.
pub fn depth_empirical_2d(cloud: &PointCloud, x: &[f64]) -> Result<DepthEstimate> {
    if cloud.dim() != 2 || x.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: if cloud.dim() != 2 { cloud.dim() } else { x.len() } });
    }
    let total = cloud.len();
    let mut dirs: Vec<[f64; 2]> = cloud
        .rows()
        .map(|p| [p[0] - x[0], p[1] - x[1]])
        .filter(|d| d[0] != 0.0 || d[1] != 0.0)
        .collect();
    let m = dirs.len();
    dirs.sort_by(angle_cmp);
    // group equal directions
    let mut reps: Vec<[f64; 2]> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for d in &dirs {
        match reps.last() {
            Some(r) if angle_cmp(r, d) == Ordering::Equal => *counts.last_mut().unwrap() += 1,
            _ => {
                reps.push(*d);
                counts.push(1);
            }
        }
    }
    let g = reps.len();
    let mut prefix = vec![0usize; 2 * g + 1];
    for i in 0..2 * g {
        prefix[i + 1] = prefix[i] + counts[i % g];
    }
    let mut max_open = 0usize;
    let mut e = 0usize;
    for k in 0..g {
        e = e.max(k + 1);
        while e < k + g && cross2(&reps[k], &reps[e % g]) > 0.0 {
            e += 1;
        }
        let left = prefix[e] - prefix[k + 1];
        let anti = if e < k + g && cross2(&reps[k], &reps[e % g]) == 0.0 && dot(&reps[k], &reps[e % g]) < 0.0 {
            counts[e % g]
        } else {
            0
        };
        let own = counts[k];
        let right = m - left - anti - own;
        max_open = max_open.max(left.max(right) + own.max(anti));
    }
    let depth = (total - max_open) as f64 / total as f64;
    Ok(DepthEstimate::exact(depth, DepthMethod::Exact2d, g, None))
}

// ----- direction search -----------------------------------------------------

/// Orthonormal basis of the tangent space at a unit vector.
fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| u[*a].abs().total_cmp(&u[*b].abs()));
    for k in order {
        let mut v = crate::linalg::unit(n, k);
        let c = dot(&v, u);
        v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(a, bb)| *a -= c * bb);
        }
        if let Some(w) = normalized(&v) {
            if norm(&v) > 1e-6 {
                basis.push(w);
            }
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

struct Probe<'a> {
    spec: &'a MeasureSpec,
    x: &'a [f64],
    evals: usize,
    max_se: f64,
}

impl Probe<'_> {
    fn mass(&mut self, u: &[f64]) -> Result<f64> {
        self.evals += 1;
        let m = self.spec.halfspace_mass(u, dot(self.x, u))?;
        self.max_se = self.max_se.max(m.std_error);
        Ok(m.value)
    }

    /// Pattern search on the sphere from `u0`.
    fn descend(&mut self, u0: &[f64], v0: f64, step0: f64) -> Result<(Vec<f64>, f64)> {
        let mut u = u0.to_vec();
        let mut best = v0;
        let mut step = step0;
        while step > 1e-9 {
            let basis = tangent_basis(&u);
            let mut moved = false;
            'dirs: for t in &basis {
                for sign in [1.0, -1.0] {
                    let cand: Vec<f64> = u.iter().zip(t).map(|(a, b)| a + sign * step * b).collect();
                    let cand = normalized(&cand).expect("nonzero");
                    let v = self.mass(&cand)?;
                    if v < best {
                        best = v;
                        u = cand;
                        moved = true;
                        break 'dirs;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        Ok((u, best))
    }
}

/// Lipschitz constant of `u -> mass(u, <x, u>)` in the angle between
/// normals, from the double-wedge bound `sup f * vol(B(x, D)) / pi`.
fn mass_modulus(spec: &MeasureSpec, x: &[f64]) -> Option<f64> {
    let n = spec.dim();
    let base_radius = match spec.family() {
        Family::UniformCube => (n as f64).sqrt(),
        Family::UniformBody(BodyShape::Ball { radius }) => *radius,
        Family::UniformBody(BodyShape::Polytope { .. }) => {
            let mut r2 = 0.0;
            for k in 0..n {
                let e = crate::linalg::unit(n, k);
                let neg: Vec<f64> = e.iter().map(|v| -v).collect();
                let hi = spec.support_extent(&e)?;
                let lo = -spec.support_extent(&neg)?;
                r2 += hi.abs().max(lo.abs()).powi(2);
            }
            return {
                let f = spec.density_sup().ok()?;
                let d = r2.sqrt() + norm(x);
                Some(f * numeric::unit_ball_volume(n) * d.powi(n as i32) / std::f64::consts::PI)
            };
        }
        _ => return None,
    };
    let f = spec.density_sup().ok()?;
    let (radius, center) = match spec.affine() {
        None => (base_radius, vec![0.0; n]),
        Some(a) => {
            let frob = a.matrix.data.iter().map(|v| v * v).sum::<f64>().sqrt();
            (frob * base_radius, a.shift.clone())
        }
    };
    let d = radius + norm(&sub(x, &center));
    Some(f * numeric::unit_ball_volume(n) * d.powi(n as i32) / std::f64::consts::PI)
}

/// Depth of `x` under `spec`, bracketed as `[lower, upper]`.
pub fn depth_analytic(spec: &MeasureSpec, x: &[f64], budget: &DirectionBudget) -> Result<DepthEstimate> {
    let n = spec.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if let Family::GaussianStd = spec.family() {
        let (z, dir) = match spec.affine() {
            None => (x.to_vec(), x.to_vec()),
            Some(a) => {
                let z = a.pull_back(x);
                // normal in the image: A^{-T} z
                let inv_t: Vec<f64> = {
                    let a_inv = crate::linalg::Matrix::from_rows(&a.matrix.rows())?.inverse()?;
                    a_inv.apply_transpose(&z)
                };
                (z, inv_t)
            }
        };
        let value = numeric::normal_sf(norm(&z));
        return Ok(DepthEstimate::exact(value, DepthMethod::ClosedForm, 0, normalized(&dir)));
    }
    if n == 2 {
        if let Some(cloud) = spec.empirical_points() {
            return depth_empirical_2d(&cloud, x);
        }
    }
    let mut probe = Probe { spec, x, evals: 0, max_se: 0.0 };
    if n == 1 {
        let up = probe.mass(&[1.0])?;
        let down = probe.mass(&[-1.0])?;
        let (v, d) = if up <= down { (up, 1.0) } else { (down, -1.0) };
        let lower = if probe.max_se == 0.0 { v } else { (v - 3.0 * probe.max_se).max(0.0) };
        let method = if probe.max_se == 0.0 { DepthMethod::DirectionGrid } else { DepthMethod::McBracket };
        return Ok(DepthEstimate { lower, upper: v, method, directions_used: 2, direction: Some(vec![d]) });
    }
    let prepared = budget.prepared(n);
    let (grid, gap) = (&prepared.0, prepared.1);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(grid.len());
    for (i, u) in grid.iter().enumerate() {
        scored.push((probe.mass(u)?, i));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let grid_min = scored[0].0;
    let mut best = (grid.directions[scored[0].1].clone(), grid_min);
    for &(v, i) in scored.iter().take(budget.refine_starts.max(1)) {
        let (u, val) = probe.descend(&grid.directions[i], v, gap)?;
        if val < best.1 {
            best = (u, val);
        }
    }
    let upper = best.1;
    let modulus = mass_modulus(spec, x);
    let (lower, method) = match (probe.max_se == 0.0, modulus) {
        (true, Some(l)) => ((grid_min - l * gap).max(0.0).min(upper), DepthMethod::DirectionGrid),
        (true, None) => (0.0, DepthMethod::McBracket),
        (false, m) => {
            let slack = m.map(|l| l * gap).unwrap_or(upper);
            ((upper - 3.0 * probe.max_se - slack).max(0.0), DepthMethod::McBracket)
        }
    };
    Ok(DepthEstimate { lower, upper, method, directions_used: probe.evals, direction: Some(best.0) })
}

/// Depth from either kind of source.
pub fn depth(source: &DepthSource, x: &[f64], budget: &DirectionBudget) -> Result<DepthEstimate> {
    match source {
        DepthSource::Spec(s) => depth_analytic(s, x, budget),
        DepthSource::Cloud(c) if c.dim() == 2 => depth_empirical_2d(c, x),
        DepthSource::Cloud(c) => depth_analytic(&MeasureSpec::empirical((*c).clone()), x, budget),
    }
}

// ----- maximal depth and level sets -----------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDepth {
    pub point: Vec<f64>,
    pub depth: DepthEstimate,
    /// `-ln` of the best depth found.
    pub p_mu: f64,
}

const MAX_CLOUD_STARTS: usize = 64;

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Multi-start maximization of the depth upper estimate. Symmetric specs
/// return their center of symmetry directly. Ties go to the
/// lexicographically smallest point.
pub fn max_depth(source: &DepthSource, budget: &DirectionBudget) -> Result<MaxDepth> {
    let eval = |x: &[f64]| depth(source, x, budget);
    let (starts, scale): (Vec<Vec<f64>>, f64) = match source {
        DepthSource::Spec(s) => {
            if let Some(c) = s.center_of_symmetry() {
                let d = eval(&c)?;
                let p_mu = -d.upper.ln();
                return Ok(MaxDepth { point: c, depth: d, p_mu });
            }
            match s.empirical_points() {
                Some(c) => cloud_starts(&c),
                None => {
                    let bar = s.barycenter()?;
                    let scale = (0..s.dim())
                        .map(|k| {
                            let e = crate::linalg::unit(s.dim(), k);
                            s.support_extent(&e).map(|h| (h - bar[k]).abs()).unwrap_or(1.0)
                        })
                        .fold(0.0, f64::max)
                        .max(1e-6);
                    (vec![bar, vec![0.0; s.dim()]], scale)
                }
            }
        }
        DepthSource::Cloud(c) => cloud_starts(c),
    };
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(starts.len());
    for s in starts {
        scored.push((eval(&s)?.upper, s));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| if lex_less(&a.1, &b.1) { Ordering::Less } else { Ordering::Greater }));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (v, s) in scored.into_iter().take(4) {
        let (x, val) = ascend(&eval, s, v, scale)?;
        let better = match &best {
            None => true,
            Some((bv, bx)) => val > bv + 1e-12 || ((val - bv).abs() <= 1e-12 && lex_less(&x, bx)),
        };
        if better {
            best = Some((val, x));
        }
    }
    let (_, point) = best.expect("at least one start");
    let d = eval(&point)?;
    let p_mu = -d.upper.ln();
    Ok(MaxDepth { point, depth: d, p_mu })
}

fn cloud_starts(c: &PointCloud) -> (Vec<Vec<f64>>, f64) {
    let stride = c.len().div_ceil(MAX_CLOUD_STARTS).max(1);
    let mut starts: Vec<Vec<f64>> = (0..c.len()).step_by(stride).map(|i| c.point(i).to_vec()).collect();
    starts.push(c.mean());
    starts.push(c.coordinate_median());
    let mean = c.mean();
    let spread = (c.rows().map(|r| dot(&sub(r, &mean), &sub(r, &mean))).sum::<f64>() / c.len() as f64).sqrt();
    (starts, spread.max(1e-9))
}

fn ascend<F>(eval: &F, start: Vec<f64>, v0: f64, scale: f64) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<DepthEstimate>,
{
    let n = start.len();
    let mut x = start;
    let mut best = v0;
    let mut step = 0.25 * scale;
    let mut evals = 0usize;
    while step > 1e-6 * scale && evals < 400 {
        let mut moved = false;
        'axes: for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[k] += sign * step;
                evals += 1;
                let v = eval(&cand)?.upper;
                if v > best + 1e-15 {
                    best = v;
                    x = cand;
                    moved = true;
                    break 'axes;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((x, best))
}

/// Options for `tukey_region`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionOptions {
    pub search: RadialSearch,
    pub budget: DirectionBudget,
}

/// The depth level set `T_p = {x : depth(x) >= e^{-p}}` on `grid`.
pub fn tukey_region(source: &DepthSource, p: f64, grid: &DirectionGrid, opts: &RegionOptions) -> Result<ConvexBodyApprox> {
    if grid.dim != source.dim() {
        return Err(Error::DimensionMismatch { expected: source.dim(), got: grid.dim });
    }
    let center = max_depth(source, &opts.budget)?;
    if p < center.p_mu - 1e-9 {
        return Err(Error::EmptyLevelSet { p, p_mu: center.p_mu });
    }
    let level = (-p).exp() * (1.0 - LEVEL_REL_TOL);
    let budget = opts.budget;
    ConvexBodyApprox::from_radial(
        grid,
        &center.point,
        Some(p),
        |y| Ok(depth(source, y, &budget)?.upper >= level),
        &opts.search,
    )
}

/// `y` belongs to `U_p` iff the half-space `{<x, y> >= 1}` has mass at most
/// `e^{-p}`; the origin always belongs.
pub fn up_membership(spec: &MeasureSpec, p: f64, y: &[f64]) -> Result<bool> {
    let Some(u) = normalized(y) else { return Ok(true) };
    let m = spec.halfspace_mass(&u, 1.0 / norm(y))?;
    Ok(m.value <= (-p).exp() * (1.0 + LEVEL_REL_TOL))
}

/// Strict variant: mass strictly below `e^{-p}`.
pub fn vp_membership(spec: &MeasureSpec, p: f64, y: &[f64]) -> Result<bool> {
    let Some(u) = normalized(y) else { return Ok(true) };
    let m = spec.halfspace_mass(&u, 1.0 / norm(y))?;
    Ok(m.value < (-p).exp() * (1.0 - LEVEL_REL_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::normal_sf;
    use rand::Rng;

    fn cloud(rows: &[[f64; 2]]) -> PointCloud {
        PointCloud::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), 0).unwrap()
    }

    /// O(N^2) oracle for clouds in general position: closed half-planes
    /// whose boundary is a line through `x` and a sample point, rotated by a
    /// tiny angle to either side.
    fn brute_depth(c: &PointCloud, x: &[f64]) -> f64 {
        let dirs: Vec<Vec<f64>> = c.rows().map(|r| sub(r, x)).collect();
        let mut normals: Vec<Vec<f64>> = vec![vec![1.0, 0.0]];
        for d in dirs.iter().filter(|d| d[0] != 0.0 || d[1] != 0.0) {
            let th = d[1].atan2(d[0]) + std::f64::consts::FRAC_PI_2;
            for s in [1e-9, -1e-9] {
                for flip in [0.0, std::f64::consts::PI] {
                    normals.push(vec![(th + s + flip).cos(), (th + s + flip).sin()]);
                }
            }
        }
        let best = normals.iter().map(|u| dirs.iter().filter(|d| dot(d, u) >= 0.0).count()).min().unwrap();
        best as f64 / c.len() as f64
    }

    #[test]
    fn cross_has_depth_half() {
        let c = cloud(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]);
        assert_eq!(depth_empirical_2d(&c, &[0.0, 0.0]).unwrap().upper, 0.5);
    }

    #[test]
    fn hull_vertex_has_depth_one_over_n() {
        let c = cloud(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [1.0, 1.0], [0.5, 0.7]]);
        assert_eq!(depth_empirical_2d(&c, &[3.0, 0.0]).unwrap().upper, 0.2);
    }

    #[test]
    fn triangle_barycenter() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let d = depth_empirical_2d(&c, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(d.upper, 1.0 / 3.0);
        assert_eq!(d.lower, d.upper);
        assert_eq!(depth_empirical_2d(&c, &[2.0, 2.0]).unwrap().upper, 0.0);
    }

    #[test]
    fn coincident_points_count_everywhere() {
        let c = cloud(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert!((depth_empirical_2d(&c, &[0.0, 0.0]).unwrap().upper - 2.0 / 3.0).abs() < 1e-15);
        let c = cloud(&[[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(depth_empirical_2d(&c, &[0.0, 0.0]).unwrap().upper, 1.0);
    }

    #[test]
    fn collinear_and_antipodal_configurations() {
        let c = cloud(&[[-2.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        assert_eq!(depth_empirical_2d(&c, &[0.0, 0.0]).unwrap().upper, 0.5);
        assert_eq!(depth_empirical_2d(&c, &[-1.0, 0.0]).unwrap().upper, 0.5);
        assert_eq!(depth_empirical_2d(&c, &[0.0, 1.0]).unwrap().upper, 0.0);
    }

    #[test]
    fn sweep_matches_brute_force_on_random_clouds() {
        let mut rng = crate::rng::task_rng(3, 0);
        for trial in 0..60 {
            let n = rng.random_range(1..40);
            let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let c = PointCloud::from_rows(&rows, 0).unwrap();
            let x = if trial % 3 == 0 { rows[0].clone() } else { vec![rng.random::<f64>(), rng.random::<f64>()] };
            assert_eq!(depth_empirical_2d(&c, &x).unwrap().upper, brute_depth(&c, &x), "trial {trial}");
        }
    }

    #[test]
    fn gaussian_depth_is_closed_form() {
        let g = MeasureSpec::gaussian(3);
        assert_eq!(depth_analytic(&g, &[0.0; 3], &Default::default()).unwrap().upper, 0.5);
        let d = depth_analytic(&MeasureSpec::gaussian(2), &[0.6, 0.8], &Default::default()).unwrap();
        assert!((d.upper - 0.158_655_253_931_457).abs() < 1e-12);
    }

    #[test]
    fn cube_depth_matches_fine_grid() {
        let cube = MeasureSpec::cube(2);
        let x = [0.5, 0.0];
        let d = depth_analytic(&cube, &x, &Default::default()).unwrap();
        assert!((d.upper - 0.25).abs() < 1e-9, "{d:?}");
        assert!(d.lower <= d.upper && d.method == DepthMethod::DirectionGrid);
        // oracle: 10^4 directions with exact masses
        let fine = DirectionGrid::circle(10_000);
        let oracle = fine.iter().map(|u| cube.halfspace_mass(u, dot(&x, u)).unwrap().value).fold(1.0, f64::min);
        assert!(d.upper <= oracle + 1e-12);
        assert!(d.lower <= oracle);
    }

    #[test]
    fn one_dimensional_depth_is_exact() {
        let d = depth_analytic(&MeasureSpec::cube(1), &[0.5], &Default::default()).unwrap();
        assert_eq!((d.lower, d.upper), (0.25, 0.25));
    }

    #[test]
    fn gaussian_region_radius() {
        let g = MeasureSpec::gaussian(2);
        let p = -normal_sf(1.0).ln();
        let grid = DirectionGrid::circle(64);
        let body = tukey_region(&DepthSource::Spec(&g), p, &grid, &RegionOptions::default()).unwrap();
        assert!(body.radii().iter().all(|r| (r - 1.0).abs() < 0.01));
        let point = tukey_region(&DepthSource::Spec(&g), 2f64.ln(), &grid, &RegionOptions::default()).unwrap();
        assert!(point.radii().iter().all(|r| *r < 1e-9));
        assert!(matches!(
            tukey_region(&DepthSource::Spec(&g), 0.5, &grid, &RegionOptions::default()),
            Err(Error::EmptyLevelSet { .. })
        ));
    }

    #[test]
    fn triangle_region_is_whole_triangle() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let m = max_depth(&DepthSource::Cloud(&c), &Default::default()).unwrap();
        assert!((m.p_mu - 3f64.ln()).abs() < 1e-12);
        let grid = DirectionGrid::circle(32);
        let body = tukey_region(&DepthSource::Cloud(&c), 3f64.ln(), &grid, &RegionOptions::default()).unwrap();
        let area = body.inner_area().unwrap();
        assert!((area - 0.5).abs() < 0.02, "{area}");
    }

    #[test]
    fn center_point_of_triangle_has_depth_third() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let spec = MeasureSpec::empirical(c.clone());
        let x = spec.center_point().unwrap();
        assert_eq!(depth_empirical_2d(&c, &x).unwrap().upper, 1.0 / 3.0);
        assert_eq!(MeasureSpec::cauchy(2).center_point().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn up_membership_examples() {
        let g2 = MeasureSpec::gaussian(2);
        assert!(up_membership(&g2, 1.0, &[0.0, 0.0]).unwrap());
        let g1 = MeasureSpec::gaussian(1);
        let p = -normal_sf(2.0).ln();
        assert!(up_membership(&g1, p, &[0.5]).unwrap());
        assert!(!vp_membership(&g1, p, &[0.5]).unwrap());
        assert!(!up_membership(&MeasureSpec::cube(1), 10.0, &[2.0]).unwrap());
    }
}

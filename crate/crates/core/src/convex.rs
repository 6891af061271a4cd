//! Convex bodies held as paired inner and outer approximations on a shared
//! direction grid, plus the radial bisection that builds them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::linalg::{axpy, dot, norm};
use crate::numeric;

/// Parameters of the radial bisection used for level sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialSearch {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// First radius probed before doubling or bisecting.
    pub initial_radius: f64,
}

impl Default for RadialSearch {
    fn default() -> Self {
        Self { rel_tol: 1e-3, max_iter: 40, initial_radius: 1.0 }
    }
}

impl RadialSearch {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

const MAX_DOUBLINGS: usize = 64;

/// Brackets the exit radius of a star-shaped set along `center + r u`:
/// returns `(r_lo, r_hi)` with `r_lo` inside (or zero) and `r_hi` outside.
pub fn radial_bracket<F>(center: &[f64], u: &[f64], inside: &F, opts: &RadialSearch) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<bool> + ?Sized,
{
    let at = |r: f64| axpy(center, r, u);
    let mut lo = 0.0;
    let mut hi = opts.initial_radius;
    let mut doublings = 0;
    while inside(&at(hi))? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::DegenerateBody("level set appears unbounded along a ray".into()));
        }
    }
    for _ in 0..opts.max_iter {
        if hi - lo <= opts.rel_tol * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(&at(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

mod grid_as_list {
    use super::DirectionGrid;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(g: &DirectionGrid, s: S) -> Result<S::Ok, S::Error> {
        g.directions.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DirectionGrid, D::Error> {
        let directions: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let dim = directions.first().map(|v| v.len()).unwrap_or(0);
        Ok(DirectionGrid { dim, directions })
    }
}

/// Inner approximation: hull of `boundary_points`. Outer approximation: the
/// intersection of `{x : <x, u_i> <= support_values[i]}` over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexBodyApprox {
    #[serde(with = "grid_as_list")]
    pub grid: DirectionGrid,
    pub boundary_points: Vec<Vec<f64>>,
    pub support_values: Vec<f64>,
    pub center: Vec<f64>,
    pub p: Option<f64>,
}

impl ConvexBodyApprox {
    /// Builds the body `{x : inside(x)}` by radial bisection from `center`
    /// along every grid direction. Support values are the inner support
    /// inflated by the widest bisection bracket.
    pub fn from_radial<F>(grid: &DirectionGrid, center: &[f64], p: Option<f64>, inside: F, opts: &RadialSearch) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<bool> + Sync,
    {
        let brackets: Vec<(f64, f64)> = grid
            .directions
            .par_iter()
            .map(|u| radial_bracket(center, u, &inside, opts))
            .collect::<Result<_>>()?;
        let boundary_points: Vec<Vec<f64>> =
            grid.iter().zip(&brackets).map(|(u, (lo, _))| axpy(center, *lo, u)).collect();
        let slack = brackets.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
        let support_values = grid
            .iter()
            .map(|u| boundary_points.iter().map(|b| dot(b, u)).fold(f64::NEG_INFINITY, f64::max) + slack)
            .collect();
        Ok(Self { grid: grid.clone(), boundary_points, support_values, center: center.to_vec(), p })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Support function of the inner hull.
    pub fn inner_support(&self, u: &[f64]) -> f64 {
        self.boundary_points.iter().map(|b| dot(b, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i (<x, u_i> - scale h_i)`; nonpositive iff `x` lies in the outer
    /// body dilated by `scale` about the origin.
    pub fn outer_margin(&self, x: &[f64], scale: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.support_values)
            .map(|(u, h)| dot(x, u) - scale * h)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distances from the center to the boundary points.
    pub fn radii(&self) -> Vec<f64> {
        self.boundary_points.iter().map(|b| norm(&crate::linalg::sub(b, &self.center))).collect()
    }

    /// Largest gap between outer and inner support on the grid.
    pub fn support_gap(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.support_values)
            .map(|(u, h)| h - self.inner_support(u))
            .fold(0.0, f64::max)
    }

    /// Checks `<b_i, u_i> <= h_i + tol` for every grid index.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.grid
            .iter()
            .zip(&self.boundary_points)
            .zip(&self.support_values)
            .all(|((u, b), h)| dot(b, u) <= h + tol)
    }

    /// Area of the inner hull (2D only).
    pub fn inner_area(&self) -> Result<f64> {
        self.require_2d()?;
        Ok(hull_2d(&self.boundary_points).1)
    }

    fn require_2d(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        Ok(())
    }

    /// Volume of the outer body: exact polygon clipping in 2D, otherwise a
    /// radial average of the outer radial function over the grid (which is
    /// equal-area for the default grids). Requires the origin inside.
    pub fn outer_volume(&self) -> Result<f64> {
        if self.support_values.iter().any(|h| *h <= 0.0) {
            return Err(Error::DegenerateBody("origin is not interior to the outer body".into()));
        }
        let n = self.dim();
        if n == 1 {
            return Ok(self.support_values.iter().sum());
        }
        if n == 2 {
            let r = self.support_values.iter().fold(0.0, |a: f64, b| a.max(*b)) * 4.0;
            return Ok(clipped_polygon_area(&self.grid.directions, &self.support_values, &[-r, -r], &[r, r]));
        }
        let mut acc = 0.0;
        for v in self.grid.iter() {
            let rho = self
                .grid
                .iter()
                .zip(&self.support_values)
                .filter_map(|(u, h)| {
                    let c = dot(u, v);
                    (c > 1e-12).then(|| h / c)
                })
                .fold(f64::INFINITY, f64::min);
            acc += rho.powi(n as i32);
        }
        Ok(numeric::unit_ball_volume(n) * acc / self.len() as f64)
    }
}

/// Andrew's monotone chain. Returns the counter-clockwise hull (collinear
/// points dropped) and its shoelace area.
pub fn hull_2d(points: &[Vec<f64>]) -> (Vec<[f64; 2]>, f64) {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return (pts, 0.0);
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let area = polygon_area(&hull);
    (hull, area)
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let m = poly.len();
    if m < 3 {
        return 0.0;
    }
    let twice: f64 = (0..m).map(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % m]);
        a[0] * b[1] - a[1] * b[0]
    }).sum();
    0.5 * twice.abs()
}

/// Area of `{x : <g_i, x> <= h_i}` inside the box `[lo, hi]` (2D).
pub fn clipped_polygon_area(normals: &[Vec<f64>], offsets: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut poly = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    for (g, h) in normals.iter().zip(offsets) {
        let val = |p: &[f64; 2]| g[0] * p[0] + g[1] * p[1] - h;
        let mut next = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (va, vb) = (val(&a), val(&b));
            if va <= 0.0 {
                next.push(a);
            }
            if (va < 0.0 && vb > 0.0) || (va > 0.0 && vb < 0.0) {
                let s = va / (va - vb);
                next.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        poly = next;
        if poly.is_empty() {
            return 0.0;
        }
    }
    polygon_area(&poly)
}

//! Body families attached to a measure beyond depth level sets.
//!
//! The families are the nonsymmetric centroid bodies `Z_p^+`, the Cramér
//! level sets `B_p` and the Ball bodies `K_p(f)`. Polar polytopes and
//! inclusion checks between bodies live here as well.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::convex::{ConvexBodyApprox, RadialSearch};
use crate::depth::{tukey_region, DepthSource, RegionOptions, LEVEL_REL_TOL};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::linalg::{affine_rank, axpy, dot, norm, normalized, scale, sub};
use crate::lp::{LpOutcome, StandardLp};
use crate::measures::{BodyShape, Family, MeasureSpec};
use crate::numeric::{self, Quadrature};
use crate::polytopes::{Membership, RandomPolytope, MEMBERSHIP_TOL};

const MOMENT_QUAD: Quadrature = Quadrature { abs_tol: 1e-16, rel_tol: 1e-12, max_depth: 30 };
const RADIAL_QUAD: Quadrature = Quadrature { abs_tol: 1e-10, rel_tol: 1e-12, max_depth: 30 };
const FD_STEP: f64 = 1e-5;
/// Moment orders used when calibrating regularity constants.
pub const REGULARITY_LADDER: [f64; 13] = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0];

/// `E g_+^p` for a standard normal `g`.
pub fn gaussian_positive_moment(p: f64) -> f64 {
    (0.5 * p * std::f64::consts::LN_2 + numeric::ln_gamma(0.5 * (p + 1.0))).exp() / (2.0 * std::f64::consts::PI.sqrt())
}

fn require_moment(spec: &MeasureSpec, p: f64) -> Result<()> {
    let infinite = match spec.family() {
        Family::ProductCauchy => true,
        Family::ProductQStable { q } => p >= *q,
        Family::SConcavePareto { kappa } => p >= *kappa,
        _ => false,
    };
    if infinite {
        return Err(Error::InfiniteMoment { order: p, family: spec.family().tag().to_string() });
    }
    Ok(())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

// ----- support functions ----------------------------------------------------

#[derive(Debug, Clone)]
pub enum SupportSource {
    Measure(MeasureSpec),
    Cloud(PointCloud),
    Polytope(RandomPolytope),
    Body(ConvexBodyApprox),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportKind {
    ZpPlus { p: f64 },
    Polytope,
    /// Support of the inner hull of a stored body approximation.
    LevelSet,
}

/// A positively homogeneous support function `h(y)`.
#[derive(Debug, Clone)]
pub struct SupportEvaluator {
    source: SupportSource,
    kind: SupportKind,
    atoms: Option<PointCloud>,
}

impl SupportEvaluator {
    pub fn new(source: SupportSource, kind: SupportKind) -> Result<Self> {
        let mut atoms = None;
        match (&source, kind) {
            (SupportSource::Measure(spec), SupportKind::ZpPlus { p }) => {
                check_order(p)?;
                require_moment(spec, p)?;
                atoms = match spec.family() {
                    Family::Empirical(_) => spec.empirical_points(),
                    Family::UniformBody(BodyShape::Polytope { .. }) => Some(spec.internal_sample()?),
                    _ => None,
                };
            }
            (SupportSource::Cloud(cloud), SupportKind::ZpPlus { p }) => {
                check_order(p)?;
                atoms = Some(cloud.clone());
            }
            (SupportSource::Polytope(_), SupportKind::Polytope) | (SupportSource::Body(_), SupportKind::LevelSet) => {}
            _ => return Err(Error::InvalidArgument(format!("support kind {kind:?} does not match the source"))),
        }
        Ok(Self { source, kind, atoms })
    }

    /// `h_{Z_p^+}` of a depth source.
    pub fn zp_plus(source: &DepthSource, p: f64) -> Result<Self> {
        let src = match source {
            DepthSource::Spec(s) => SupportSource::Measure((*s).clone()),
            DepthSource::Cloud(c) => SupportSource::Cloud((*c).clone()),
        };
        Self::new(src, SupportKind::ZpPlus { p })
    }

    pub fn kind(&self) -> SupportKind {
        self.kind
    }

    /// Draw budget behind Monte Carlo moments, when the source is a measure.
    pub fn mc_budget(&self) -> Option<usize> {
        match &self.source {
            SupportSource::Measure(s) => Some(s.mc_budget()),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            SupportSource::Measure(s) => s.dim(),
            SupportSource::Cloud(c) => c.dim(),
            SupportSource::Polytope(p) => p.dim,
            SupportSource::Body(b) => b.dim(),
        }
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        check_len(self.dim(), y.len())?;
        let r = norm(y);
        if !r.is_finite() {
            return Err(Error::InvalidArgument("direction has non-finite entries".into()));
        }
        let Some(u) = normalized(y) else { return Ok(0.0) };
        let h = match (&self.source, self.kind) {
            (SupportSource::Polytope(p), _) => p.support(&u),
            (SupportSource::Body(b), _) => b.inner_support(&u),
            (_, SupportKind::ZpPlus { p }) => self.positive_moment(&u, p)?.powf(1.0 / p),
            _ => unreachable!(),
        };
        Ok(r * h)
    }

    /// `E <X, u>_+^p` for a unit `u`.
    fn positive_moment(&self, u: &[f64], p: f64) -> Result<f64> {
        if let Some(cloud) = &self.atoms {
            return Ok(cloud.rows().map(|x| dot(x, u).max(0.0).powf(p)).sum::<f64>() / cloud.len() as f64);
        }
        let SupportSource::Measure(spec) = &self.source else { unreachable!() };
        if let Some(w) = gaussian_linear_image(spec, u) {
            return Ok(norm(&w).powf(p) * gaussian_positive_moment(p));
        }
        let failure = std::cell::RefCell::new(None);
        let tail = |s: f64| match spec.halfspace_mass(u, s) {
            Ok(m) => p * s.powf(p - 1.0) * m.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let value = match spec.support_extent(u) {
            Some(e) if e <= 0.0 => 0.0,
            Some(e) => MOMENT_QUAD.integrate(tail, 0.0, e),
            None => MOMENT_QUAD.integrate_to_infinity(tail, 0.0),
        };
        match failure.into_inner() {
            Some(e) => Err(e),
            None if value.is_finite() => Ok(value.max(0.0)),
            None => Err(Error::InfiniteMoment { order: p, family: spec.family().tag().to_string() }),
        }
    }

    /// A point of the body where the supporting hyperplane with normal `u`
    /// touches it: the gradient of `h` at `u`.
    pub fn contact_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        let u = normalized(u).ok_or_else(|| Error::InvalidArgument("zero direction".into()))?;
        let n = u.len();
        if let (Some(cloud), SupportKind::ZpPlus { p }) = (&self.atoms, self.kind) {
            let h = self.evaluate(&u)?;
            if h == 0.0 {
                return Ok(vec![0.0; n]);
            }
            let mut acc = vec![0.0; n];
            for x in cloud.rows() {
                let s = dot(x, &u);
                if s > 0.0 {
                    let w = s.powf(p - 1.0);
                    acc.iter_mut().zip(x).for_each(|(a, xi)| *a += w * xi);
                }
            }
            let c = h.powf(1.0 - p) / cloud.len() as f64;
            return Ok(scale(&acc, c));
        }
        if let (SupportSource::Measure(spec), SupportKind::ZpPlus { p }) = (&self.source, self.kind) {
            if let Some(w) = gaussian_linear_image(spec, &u) {
                let c = gaussian_positive_moment(p).powf(1.0 / p) / norm(&w);
                return Ok(match spec.affine() {
                    Some(a) => scale(&a.matrix.apply(&w), c),
                    None => scale(&w, c),
                });
            }
        }
        (0..n)
            .map(|k| {
                let mut plus = u.clone();
                let mut minus = u.clone();
                plus[k] += FD_STEP;
                minus[k] -= FD_STEP;
                Ok((self.evaluate(&plus)? - self.evaluate(&minus)?) / (2.0 * FD_STEP))
            })
            .collect()
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("moment order must be a finite p >= 1, got {p}")));
    }
    Ok(())
}

/// For a centered linear image `A g` of the standard Gaussian, `A^T u`
/// (so `<A g, u>` is distributed as `|A^T u| g_1`).
fn gaussian_linear_image(spec: &MeasureSpec, u: &[f64]) -> Option<Vec<f64>> {
    if *spec.family() != Family::GaussianStd {
        return None;
    }
    match spec.affine() {
        None => Some(u.to_vec()),
        Some(a) if a.shift.iter().all(|v| *v == 0.0) => Some(a.matrix.apply_transpose(u)),
        Some(_) => None,
    }
}

/// `h_{Z_p^+(mu)}(y) = (E <X, y>_+^p)^{1/p}`.
pub fn zp_plus_support(source: &DepthSource, p: f64, y: &[f64]) -> Result<f64> {
    SupportEvaluator::zp_plus(source, p)?.evaluate(y)
}

/// `Z_p^+` on `grid`: exact support values, with contact points (clipped to
/// the outer polytope) as the inner approximation.
pub fn zp_plus_body(source: &DepthSource, p: f64, grid: &DirectionGrid) -> Result<ConvexBodyApprox> {
    let n = source.dim();
    check_len(n, grid.dim)?;
    let atoms = match source {
        DepthSource::Cloud(c) => Some((*c).clone()),
        DepthSource::Spec(s) => s.empirical_points(),
    };
    if let Some(c) = atoms {
        if affine_rank(&c.to_rows(), 1e-10) < n {
            return Err(Error::DegenerateBody("all mass lies on a hyperplane".into()));
        }
    }
    let eval = SupportEvaluator::zp_plus(source, p)?;
    let support_values: Vec<f64> = grid.directions.par_iter().map(|u| eval.evaluate(u)).collect::<Result<_>>()?;
    let contacts: Vec<Vec<f64>> = grid.directions.par_iter().map(|u| eval.contact_point(u)).collect::<Result<_>>()?;
    let boundary_points = contacts.into_iter().map(|b| clip_to_outer(b, grid, &support_values)).collect();
    Ok(ConvexBodyApprox { grid: grid.clone(), boundary_points, support_values, center: vec![0.0; n], p: Some(p) })
}

/// Shrinks `b` toward the origin until it satisfies every grid constraint.
fn clip_to_outer(b: Vec<f64>, grid: &DirectionGrid, h: &[f64]) -> Vec<f64> {
    let factor = grid
        .iter()
        .zip(h)
        .filter_map(|(u, hv)| {
            let s = dot(&b, u);
            (s > *hv).then(|| (hv / s).max(0.0))
        })
        .fold(1.0, f64::min);
    if factor < 1.0 {
        scale(&b, factor)
    } else {
        b
    }
}

/// Smallest constants making the moment-growth inequalities hold on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCalibration {
    /// `max h_{2p}(u) / (2 h_p(u))`.
    pub alpha: f64,
    /// `max (p/q) h_q(u) / h_p(u)` over ladder pairs `q > p`.
    pub alpha_strong: f64,
    pub worst_p: f64,
    pub worst_direction: Vec<f64>,
}

pub fn calibrate_regularity(source: &DepthSource, grid: &DirectionGrid, ladder: &[f64]) -> Result<RegularityCalibration> {
    check_len(source.dim(), grid.dim)?;
    if ladder.is_empty() {
        return Err(Error::InvalidArgument("regularity ladder is empty".into()));
    }
    let mut orders: Vec<f64> = ladder.iter().flat_map(|p| [*p, 2.0 * p]).collect();
    orders.sort_by(f64::total_cmp);
    orders.dedup();
    let evals: Vec<SupportEvaluator> =
        orders.iter().map(|p| SupportEvaluator::zp_plus(source, *p)).collect::<Result<_>>()?;
    let idx = |p: f64| orders.iter().position(|q| *q == p).expect("order present");
    let rows: Vec<Vec<f64>> = grid
        .directions
        .par_iter()
        .map(|u| evals.iter().map(|e| e.evaluate(u)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let mut out = RegularityCalibration { alpha: 0.0, alpha_strong: 0.0, worst_p: ladder[0], worst_direction: grid.directions[0].clone() };
    for (u, h) in grid.iter().zip(&rows) {
        for &p in ladder {
            let (hp, h2p) = (h[idx(p)], h[idx(2.0 * p)]);
            if hp <= 0.0 {
                continue;
            }
            let ratio = h2p / (2.0 * hp);
            if ratio > out.alpha {
                out.alpha = ratio;
                out.worst_p = p;
                out.worst_direction = u.clone();
            }
            for &q in ladder.iter().filter(|q| **q > p) {
                out.alpha_strong = out.alpha_strong.max(p / q * h[idx(q)] / hp);
            }
        }
    }
    Ok(out)
}

// ----- Cramér transform -----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CramerOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for CramerOptions {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CramerValue {
    Finite { value: f64, xi: Vec<f64>, converged: bool, iterations: usize },
    /// The objective grows without bound along `direction`.
    Infinite { direction: Vec<f64> },
}

impl CramerValue {
    pub fn value(&self) -> f64 {
        match self {
            CramerValue::Finite { value, .. } => *value,
            CramerValue::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, CramerValue::Finite { .. })
    }
}

/// `Lambda*(x) = sup_xi <x, xi> - Lambda(xi)` by damped Newton ascent.
#[derive(Debug, Clone)]
pub struct CramerEvaluator {
    spec: MeasureSpec,
    opts: CramerOptions,
}

const ARMIJO: f64 = 1e-4;
const DIVERGENCE_RADIUS: f64 = 1e7;

impl CramerEvaluator {
    pub fn new(spec: &MeasureSpec, opts: CramerOptions) -> Result<Self> {
        if !spec.capabilities().log_laplace {
            return Err(Error::Unsupported { op: "cramer_transform", family: spec.family().tag().to_string() });
        }
        Ok(Self { spec: spec.clone(), opts })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<CramerValue> {
        self.ascend(x, None)
    }

    /// Whether `Lambda*(x) > level`. Stops as soon as the running objective,
    /// a lower bound for the supremum, passes `level`. A run that neither
    /// converges nor passes the level counts as exceeding it.
    pub fn exceeds(&self, x: &[f64], level: f64) -> Result<bool> {
        Ok(match self.ascend(x, Some(level))? {
            CramerValue::Infinite { .. } => true,
            CramerValue::Finite { value, converged, .. } => value > level || !converged,
        })
    }

    fn ascend(&self, x: &[f64], stop_above: Option<f64>) -> Result<CramerValue> {
        let n = self.spec.dim();
        check_len(n, x.len())?;
        if self.spec.affine().is_none() && *self.spec.family() == Family::GaussianStd {
            return Ok(CramerValue::Finite { value: 0.5 * dot(x, x), xi: x.to_vec(), converged: true, iterations: 0 });
        }
        let limit = DIVERGENCE_RADIUS * norm(x).max(1.0);
        let mut xi = vec![0.0; n];
        let mut eval = self.spec.log_laplace_full(&xi)?;
        let mut f = -eval.value;
        for it in 0..self.opts.max_iter {
            let g = sub(x, &eval.gradient);
            if norm(&g) < self.opts.grad_tol {
                return Ok(CramerValue::Finite { value: f, xi, converged: true, iterations: it });
            }
            let d = newton_direction(&eval.hessian, &g, n);
            let slope = dot(&g, &d);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let cand = axpy(&xi, t, &d);
                if let Ok(e) = self.spec.log_laplace_full(&cand) {
                    let fc = dot(x, &cand) - e.value;
                    if fc.is_finite() && fc >= f + ARMIJO * t * slope {
                        accepted = Some((cand, e, fc));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((cand, e, fc)) = accepted else {
                return Ok(CramerValue::Finite { value: f, xi, converged: false, iterations: it });
            };
            xi = cand;
            eval = e;
            f = fc;
            if norm(&xi) > limit {
                return Ok(CramerValue::Infinite { direction: normalized(&xi).expect("nonzero") });
            }
            if stop_above.is_some_and(|level| f > level) {
                return Ok(CramerValue::Finite { value: f, xi, converged: false, iterations: it + 1 });
            }
        }
        Ok(CramerValue::Finite { value: f, xi, converged: false, iterations: self.opts.max_iter })
    }
}

/// Newton step `H^{-1} g` when the Hessian is positive definite and the
/// step ascends, otherwise the gradient itself.
fn newton_direction(hessian: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    let h = DMatrix::from_row_slice(n, n, hessian);
    if let Some(chol) = h.cholesky() {
        let d = chol.solve(&DVector::from_column_slice(g));
        let d: Vec<f64> = d.iter().copied().collect();
        if d.iter().all(|v| v.is_finite()) && dot(&d, g) > 0.0 {
            return d;
        }
    }
    g.to_vec()
}

pub fn cramer_transform(spec: &MeasureSpec, x: &[f64]) -> Result<CramerValue> {
    CramerEvaluator::new(spec, CramerOptions::default())?.evaluate(x)
}

/// `B_p = {x : Lambda*(x) <= p}` by radial bisection from the barycenter.
pub fn bp_level_set(spec: &MeasureSpec, p: f64, grid: &DirectionGrid, search: &RadialSearch) -> Result<ConvexBodyApprox> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {p}")));
    }
    check_len(spec.dim(), grid.dim)?;
    let eval = CramerEvaluator::new(spec, CramerOptions::default())?;
    let center = spec.barycenter()?;
    let level = p * (1.0 + LEVEL_REL_TOL);
    ConvexBodyApprox::from_radial(grid, &center, Some(p), |y| Ok(!eval.exceeds(y, level)?), search)
}

// ----- Ball bodies ------------------------------------------------------------

/// Radial function of `K_p(f)`:
/// `rho(x) = ((1/f(0)) int_0^inf p r^{p-1} f(r x) dr)^{1/p}`.
pub fn ball_body_radial(spec: &MeasureSpec, p: f64, x: &[f64]) -> Result<f64> {
    let n = spec.dim();
    check_len(n, x.len())?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("order must be positive, got {p}")));
    }
    let xn = norm(x);
    if xn == 0.0 || !xn.is_finite() {
        return Err(Error::InvalidArgument("radial function needs a finite nonzero direction".into()));
    }
    if !spec.capabilities().density {
        return Err(Error::Unsupported { op: "ball_body_radial", family: spec.family().tag().to_string() });
    }
    let origin = vec![0.0; n];
    let f0 = spec.density(&origin)?;
    if !(f0 > 0.0) {
        return Err(Error::Precondition("density vanishes at the origin".into()));
    }
    require_radial_integrability(spec, p, x)?;
    if spec.affine().is_none() && *spec.family() == Family::GaussianStd {
        let ln = (p.ln() + (0.5 * p - 1.0) * std::f64::consts::LN_2 + numeric::ln_gamma(0.5 * p)) / p;
        return Ok(ln.exp() / xn);
    }
    let ratio = |r: f64| spec.density(&scale(x, r)).map(|v| v / f0).unwrap_or(f64::NAN);
    let integrand = |r: f64| {
        let w = ratio(r);
        if w == 0.0 {
            0.0
        } else {
            p * r.powf(p - 1.0) * w
        }
    };
    let u = scale(x, 1.0 / xn);
    let total = match spec.support_extent(&u) {
        Some(extent) => {
            let (mut lo, mut hi) = (0.0, (extent / xn) * (1.0 + 1e-9) + 1e-300);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ratio(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            RADIAL_QUAD.integrate(integrand, 0.0, lo)
        }
        None => {
            let mut cut = 1.0 / xn;
            let mut doublings = 0;
            while ratio(cut) >= 1e-16 {
                cut *= 2.0;
                doublings += 1;
                if doublings > 200 {
                    return Err(Error::InfiniteMoment { order: p, family: spec.family().tag().to_string() });
                }
            }
            RADIAL_QUAD.integrate(integrand, 0.0, cut) + RADIAL_QUAD.integrate_to_infinity(integrand, cut)
        }
    };
    if !total.is_finite() {
        return Err(Error::InfiniteMoment { order: p, family: spec.family().tag().to_string() });
    }
    Ok(total.powf(1.0 / p))
}

fn require_radial_integrability(spec: &MeasureSpec, p: f64, x: &[f64]) -> Result<()> {
    let n = spec.dim() as f64;
    let ok = match spec.family() {
        Family::SConcavePareto { kappa } => p < n + kappa,
        Family::ProductCauchy => {
            let z = match spec.affine() {
                Some(a) => sub(&a.pull_back(x), &a.pull_back(&vec![0.0; x.len()])),
                None => x.to_vec(),
            };
            let scale_z = norm(&z);
            let active = z.iter().filter(|v| v.abs() > 1e-12 * scale_z).count();
            p < 2.0 * active as f64
        }
        _ => true,
    };
    if !ok {
        return Err(Error::InfiniteMoment { order: p, family: spec.family().tag().to_string() });
    }
    Ok(())
}

/// `K_p(f)` on `grid` with boundary points `rho(u) u`.
pub fn ball_body(spec: &MeasureSpec, p: f64, grid: &DirectionGrid) -> Result<ConvexBodyApprox> {
    check_len(spec.dim(), grid.dim)?;
    let radii: Vec<f64> = grid.directions.par_iter().map(|u| ball_body_radial(spec, p, u)).collect::<Result<_>>()?;
    let boundary_points: Vec<Vec<f64>> = grid.iter().zip(&radii).map(|(u, r)| scale(u, *r)).collect();
    let support_values = grid
        .iter()
        .map(|u| boundary_points.iter().map(|b| dot(b, u)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(ConvexBodyApprox { grid: grid.clone(), boundary_points, support_values, center: vec![0.0; spec.dim()], p: Some(p) })
}

/// `vol(K_p(f)) = vol(B_2^n) * mean_u rho(u)^n`, averaging over `grid`.
pub fn ball_body_volume(spec: &MeasureSpec, p: f64, grid: &DirectionGrid) -> Result<f64> {
    check_len(spec.dim(), grid.dim)?;
    let n = spec.dim() as i32;
    let sum: f64 = grid
        .directions
        .par_iter()
        .map(|u| ball_body_radial(spec, p, u).map(|r| r.powi(n)))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(numeric::unit_ball_volume(spec.dim()) * sum / grid.len() as f64)
}

// ----- polarity -------------------------------------------------------------

/// `{x : <normals_i, x> <= offsets_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceRep {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl HalfspaceRep {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(a, b)| dot(a, x) <= b + tol)
    }
}

/// Polar of `conv(vertices)`: `{x : <x, v_i> <= 1}`. The origin must be
/// interior, which is checked by maximizing the smallest convex weight of a
/// representation of the origin.
pub fn polar_polytope(vertices: &[Vec<f64>]) -> Result<HalfspaceRep> {
    let n = vertices.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 || vertices.iter().any(|v| v.len() != n || v.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidArgument("polar needs finite vertices of one positive dimension".into()));
    }
    let m = vertices.len();
    if m <= n || affine_rank(vertices, 1e-10) < n {
        return Err(Error::Precondition("vertices do not span a full-dimensional polytope".into()));
    }
    // variables: t, mu_1..mu_m with lambda_i = t + mu_i
    let cols = m + 1;
    let rows = n + 1;
    let mut a = vec![0.0; rows * cols];
    for k in 0..n {
        a[k * cols] = vertices.iter().map(|v| v[k]).sum();
        for (i, v) in vertices.iter().enumerate() {
            a[k * cols + 1 + i] = v[k];
        }
    }
    a[n * cols] = m as f64;
    for i in 0..m {
        a[n * cols + 1 + i] = 1.0;
    }
    let mut b = vec![0.0; rows];
    b[n] = 1.0;
    let mut c = vec![0.0; cols];
    c[0] = 1.0;
    let lp = StandardLp { rows, cols, a, b, c };
    let interior = match lp.solve()? {
        LpOutcome::Optimal { objective, .. } => objective > 1e-9 / m as f64,
        LpOutcome::Infeasible { .. } => false,
        LpOutcome::Unbounded => return Err(Error::SolverFailure("interior program reported unbounded".into())),
    };
    if !interior {
        return Err(Error::Precondition("origin is not interior to the polytope".into()));
    }
    Ok(HalfspaceRep { normals: vertices.to_vec(), offsets: vec![1.0; m] })
}

// ----- inclusion ------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum InclusionTarget<'a> {
    Body(&'a ConvexBodyApprox),
    Polytope(&'a RandomPolytope),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionVerdict {
    CertifiedIn,
    CertifiedOut,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub verdict: InclusionVerdict,
    /// `max_i (h_A(u_i) - scale h_B(u_i))`; nonpositive when the outer
    /// supports are ordered.
    pub worst_support_excess: f64,
    /// Inner point of `A` with the worst membership margin in `scale B`.
    pub witness: Option<Vec<f64>>,
    /// A separating direction for the witness, when one was certified.
    pub separator: Option<Vec<f64>>,
    pub points_checked: usize,
}

/// Decides `A ⊆ scale B`. Certified inclusion needs every inner point of `A`
/// inside `scale B` (by the hull LP) and ordered outer supports on the grid;
/// certified exclusion needs an inner point of `A` beyond `scale B`'s outer
/// approximation by more than the combined bracket slack.
pub fn check_inclusion(a: &ConvexBodyApprox, target: InclusionTarget, scale_by: f64) -> Result<InclusionReport> {
    if !(scale_by > 0.0 && scale_by.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale_by}")));
    }
    let hull;
    let (poly, b_support): (&RandomPolytope, Vec<f64>) = match target {
        InclusionTarget::Body(b) => {
            check_len(a.dim(), b.dim())?;
            if !a.grid.same_as(&b.grid) {
                return Err(Error::GridMismatch);
            }
            hull = RandomPolytope::from_vertices(b.boundary_points.clone(), false)?;
            (&hull, b.support_values.clone())
        }
        InclusionTarget::Polytope(p) => {
            check_len(a.dim(), p.dim)?;
            let support = a.grid.iter().map(|u| p.support(u)).collect();
            if p.dim == 2 {
                let h = p.hull_2d()?;
                if !h.degenerate {
                    hull = RandomPolytope::from_vertices(h.vertices.iter().map(|v| v.to_vec()).collect(), false)?;
                    (&hull, support)
                } else {
                    (p, support)
                }
            } else {
                (p, support)
            }
        }
    };
    let magnitude = a
        .support_values
        .iter()
        .chain(&b_support)
        .map(|v| v.abs())
        .fold(1.0, f64::max)
        * scale_by.max(1.0);
    let tol = 1e-9 * magnitude;
    let worst_support_excess = a
        .support_values
        .iter()
        .zip(&b_support)
        .map(|(ha, hb)| ha - scale_by * hb)
        .fold(f64::NEG_INFINITY, f64::max);

    struct PointCheck {
        inside: bool,
        outer_excess: f64,
        separator: Option<Vec<f64>>,
    }
    let checks: Vec<PointCheck> = a
        .boundary_points
        .par_iter()
        .map(|x| {
            let y = scale(x, 1.0 / scale_by);
            let m = poly.membership(&y)?;
            let (inside, sep_margin, separator) = match m {
                Membership::Inside => (true, f64::NEG_INFINITY, None),
                Membership::Outside { separator, margin } => (false, margin * scale_by, Some(separator)),
            };
            let outer_excess = match target {
                InclusionTarget::Body(b) => b.outer_margin(x, scale_by),
                InclusionTarget::Polytope(_) => sep_margin,
            };
            Ok(PointCheck { inside, outer_excess, separator })
        })
        .collect::<Result<_>>()?;

    let out_tol = match target {
        InclusionTarget::Body(b) => a.support_gap() + scale_by * b.support_gap() + tol,
        InclusionTarget::Polytope(_) => MEMBERSHIP_TOL * magnitude,
    };
    let mut worst: Option<usize> = None;
    for (i, c) in checks.iter().enumerate() {
        let better = match worst {
            None => !c.inside,
            Some(w) => !c.inside && c.outer_excess > checks[w].outer_excess,
        };
        if better {
            worst = Some(i);
        }
    }
    let all_inside = worst.is_none();
    let verdict = if all_inside && worst_support_excess <= tol {
        InclusionVerdict::CertifiedIn
    } else if checks.iter().any(|c| !c.inside && c.outer_excess > out_tol) {
        InclusionVerdict::CertifiedOut
    } else {
        InclusionVerdict::Undecided
    };
    let witness = worst.map(|i| a.boundary_points[i].clone());
    let separator = worst.and_then(|i| checks[i].separator.clone());
    Ok(InclusionReport { verdict, worst_support_excess, witness, separator, points_checked: checks.len() })
}

// ----- the body ladder ---------------------------------------------------------

/// Constants tried, in order, for `B_p ⊆ 2 Z_{Cp}^+`.
pub const LADDER_CONSTANTS: [f64; 12] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub p: f64,
    pub alpha: f64,
    /// Level `2 ln(2 e alpha) p` of the depth set containing `Z_p^+ / 2`.
    pub tukey_level: f64,
    pub tp_in_bp: InclusionReport,
    pub zp_in_tp: InclusionReport,
    /// Smallest constant from [`LADDER_CONSTANTS`] with a certified verdict.
    pub constant: Option<f64>,
    pub bp_in_zp: InclusionReport,
}

impl LadderReport {
    pub fn all_certified(&self) -> bool {
        [&self.tp_in_bp, &self.zp_in_tp, &self.bp_in_zp].iter().all(|r| r.verdict == InclusionVerdict::CertifiedIn)
    }
}

/// Checks `T_p ⊆ B_p`, `Z_p^+ ⊆ 2 T_{2 ln(2 e alpha) p}` and searches the
/// smallest listed `C` with `B_p ⊆ 2 Z_{Cp}^+`, all on one grid.
pub fn body_ladder(spec: &MeasureSpec, p: f64, alpha: f64, grid: &DirectionGrid, opts: &RegionOptions) -> Result<LadderReport> {
    check_order(p)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let source = DepthSource::Spec(spec);
    let tp = tukey_region(&source, p, grid, opts)?;
    let bp = bp_level_set(spec, p, grid, &opts.search)?;
    let tp_in_bp = check_inclusion(&tp, InclusionTarget::Body(&bp), 1.0)?;
    let tukey_level = 2.0 * (2.0 * std::f64::consts::E * alpha).ln() * p;
    let zp = zp_plus_body(&source, p, grid)?;
    let wide = tukey_region(&source, tukey_level, grid, opts)?;
    let zp_in_tp = check_inclusion(&zp, InclusionTarget::Body(&wide), 2.0)?;
    let mut last = None;
    for c in LADDER_CONSTANTS {
        if c * p < 1.0 {
            continue;
        }
        let z = zp_plus_body(&source, c * p, grid)?;
        let r = check_inclusion(&bp, InclusionTarget::Body(&z), 2.0)?;
        if r.verdict == InclusionVerdict::CertifiedIn {
            return Ok(LadderReport { p, alpha, tukey_level, tp_in_bp, zp_in_tp, constant: Some(c), bp_in_zp: r });
        }
        last = Some(r);
    }
    let bp_in_zp = last.ok_or_else(|| Error::InvalidArgument("no ladder constant applies".into()))?;
    Ok(LadderReport { p, alpha, tukey_level, tp_in_bp, zp_in_tp, constant: None, bp_in_zp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{unit, Matrix};

    fn gaussian_oracle_moment(p: f64) -> f64 {
        let q = Quadrature { abs_tol: 1e-14, rel_tol: 1e-12, max_depth: 40 };
        q.integrate_to_infinity(|x| x.powf(p) * numeric::normal_pdf(x), 0.0)
    }

    #[test]
    fn gaussian_support_matches_quadrature() {
        let g = MeasureSpec::gaussian(2);
        for p in [1.0, 2.0, 3.5, 8.0] {
            let h = zp_plus_support(&DepthSource::Spec(&g), p, &[1.0, 0.0]).unwrap();
            assert!((h - gaussian_oracle_moment(p).powf(1.0 / p)).abs() < 1e-9, "p = {p}");
        }
        let h1 = zp_plus_support(&DepthSource::Spec(&g), 1.0, &[0.0, 3.0]).unwrap();
        assert!((h1 - 3.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_and_two_point_supports() {
        let cube = MeasureSpec::cube(2);
        let h = zp_plus_support(&DepthSource::Spec(&cube), 1.0, &[1.0, 0.0]).unwrap();
        assert!((h - 0.25).abs() < 1e-10);
        let cloud = PointCloud::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 0).unwrap();
        assert_eq!(zp_plus_support(&DepthSource::Cloud(&cloud), 1.0, &[1.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn sheared_gaussian_uses_linear_image() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let g = MeasureSpec::gaussian(2).with_affine(a.clone(), vec![0.0, 0.0]).unwrap();
        let shifted = MeasureSpec::gaussian(2).with_affine(a, vec![0.0, 1e-300]).unwrap();
        let u = [0.6, 0.8];
        let exact = zp_plus_support(&DepthSource::Spec(&g), 2.0, &u).unwrap();
        let quad = zp_plus_support(&DepthSource::Spec(&shifted), 2.0, &u).unwrap();
        assert!((exact - quad).abs() < 1e-8, "{exact} vs {quad}");
    }

    #[test]
    fn heavy_tails_reject_large_orders() {
        let c = MeasureSpec::cauchy(2);
        assert!(matches!(zp_plus_support(&DepthSource::Spec(&c), 1.0, &[1.0, 0.0]), Err(Error::InfiniteMoment { .. })));
        let s = MeasureSpec::qstable(2, 1.5).unwrap();
        assert!(zp_plus_support(&DepthSource::Spec(&s), 1.2, &[1.0, 0.0]).is_ok());
        assert!(zp_plus_support(&DepthSource::Spec(&s), 1.5, &[1.0, 0.0]).is_err());
        let pa = MeasureSpec::pareto(2, 3.0).unwrap();
        assert!(zp_plus_support(&DepthSource::Spec(&pa), 3.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn gaussian_zp_body_is_a_ball() {
        let g = MeasureSpec::gaussian(2);
        let grid = DirectionGrid::circle(64);
        let body = zp_plus_body(&DepthSource::Spec(&g), 2.0, &grid).unwrap();
        for (h, b) in body.support_values.iter().zip(&body.boundary_points) {
            assert!((h - 0.5f64.sqrt()).abs() < 1e-12);
            assert!((norm(b) - 0.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_contact_points_lie_in_the_outer_body() {
        let cube = MeasureSpec::cube(2);
        let grid = DirectionGrid::circle(32);
        let body = zp_plus_body(&DepthSource::Spec(&cube), 2.0, &grid).unwrap();
        assert!(body.is_consistent(1e-12));
        assert!(body.support_values.iter().all(|h| *h > 0.0));
        // contact point in direction e1 is close to (h(e1), 0)
        let b0 = &body.boundary_points[0];
        assert!((b0[0] - body.support_values[0]).abs() < 1e-4 && b0[1].abs() < 1e-4, "{b0:?}");
    }

    #[test]
    fn degenerate_cloud_is_rejected() {
        let cloud = PointCloud::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0], vec![2.0, 2.0]], 0).unwrap();
        let r = zp_plus_body(&DepthSource::Cloud(&cloud), 1.0, &DirectionGrid::circle(8));
        assert!(matches!(r, Err(Error::DegenerateBody(_))));
    }

    #[test]
    fn cramer_gaussian_and_cube() {
        let g = MeasureSpec::gaussian(2);
        assert_eq!(cramer_transform(&g, &[1.0, 1.0]).unwrap().value(), 1.0);
        let cube = MeasureSpec::cube(1);
        let (_, best) = numeric::golden_max(|xi| 0.5 * xi - numeric::ln_sinhc(xi), 0.0, 10.0, 1e-12);
        let v = cramer_transform(&cube, &[0.5]).unwrap().value();
        assert!((v - best).abs() < 1e-6, "{v} vs {best}");
        assert!(cramer_transform(&cube, &[0.0]).unwrap().value().abs() < 1e-15);
        assert!(!cramer_transform(&cube, &[1.5]).unwrap().is_finite());
        assert!(CramerEvaluator::new(&MeasureSpec::cauchy(2), CramerOptions::default()).is_err());
    }

    #[test]
    fn cramer_of_sheared_gaussian_is_quadratic() {
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 2.0]]).unwrap();
        let g = MeasureSpec::gaussian(2).with_affine(a.clone(), vec![1.0, -1.0]).unwrap();
        let x = [2.0, 0.5];
        let inv = a.inverse().unwrap();
        let z = inv.apply(&[1.0, 1.5]);
        let v = cramer_transform(&g, &x).unwrap().value();
        assert!((v - 0.5 * dot(&z, &z)).abs() < 1e-10);
    }

    #[test]
    fn gaussian_bp_radius() {
        let g = MeasureSpec::gaussian(3);
        let grid = DirectionGrid::new(3, 50, 1);
        let body = bp_level_set(&g, 2.0, &grid, &RadialSearch::with_rel_tol(1e-6)).unwrap();
        assert!(body.radii().iter().all(|r| (r - 2.0).abs() < 1e-5));
    }

    #[test]
    fn cube_bp_stays_inside_the_cube() {
        let cube = MeasureSpec::cube(2);
        let body = bp_level_set(&cube, 1.0, &DirectionGrid::circle(32), &RadialSearch::default()).unwrap();
        assert!(body.boundary_points.iter().all(|b| b.iter().all(|v| v.abs() < 1.0)));
    }

    #[test]
    fn ball_body_identities() {
        let g = MeasureSpec::gaussian(2);
        let rho = ball_body_radial(&g, 2.0, &[1.0, 0.0]).unwrap();
        assert!((rho - 2f64.sqrt()).abs() < 1e-12);
        let shifted = MeasureSpec::gaussian(2).with_affine(Matrix::identity(2), vec![0.0, 1e-300]).unwrap();
        let rho_q = ball_body_radial(&shifted, 2.0, &[1.0, 0.0]).unwrap();
        assert!((rho_q - rho).abs() < 1e-8, "{rho_q}");
        let square = MeasureSpec::cube(2);
        let r = ball_body_radial(&square, 3.0, &[0.6, 0.8]).unwrap();
        assert!((r - 1.25).abs() < 1e-9, "{r}");
        let pa = MeasureSpec::pareto(2, 2.0).unwrap();
        assert!(ball_body_radial(&pa, 3.5, &[1.0, 0.0]).is_ok());
        assert!(ball_body_radial(&pa, 4.0, &[1.0, 0.0]).is_err());
        assert!(ball_body_radial(&MeasureSpec::cauchy(2), 2.0, &[1.0, 0.0]).is_err());
        assert!(ball_body_radial(&MeasureSpec::cauchy(2), 3.0, &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn polarity() {
        let cross = vec![unit(2, 0), scale(&unit(2, 0), -1.0), unit(2, 1), scale(&unit(2, 1), -1.0)];
        let polar = polar_polytope(&cross).unwrap();
        assert!(polar.contains(&[1.0, 1.0], 1e-12));
        assert!(!polar.contains(&[1.01, 0.0], 0.0));
        let simplex = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]];
        assert!(matches!(polar_polytope(&simplex), Err(Error::Precondition(_))));
        let edge = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        assert!(polar_polytope(&edge).is_err());
    }

    fn disc(radius: f64) -> ConvexBodyApprox {
        let grid = DirectionGrid::circle(64);
        let spec = MeasureSpec::ball(2, radius).unwrap();
        ball_body(&spec, 1.0, &grid).unwrap()
    }

    #[test]
    fn inclusion_of_discs() {
        let (small, big) = (disc(1.0), disc(2.0));
        assert_eq!(check_inclusion(&small, InclusionTarget::Body(&big), 1.0).unwrap().verdict, InclusionVerdict::CertifiedIn);
        let r = check_inclusion(&big, InclusionTarget::Body(&small), 1.0).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::CertifiedOut);
        assert!(r.witness.is_some());
        let other = ConvexBodyApprox { grid: DirectionGrid::circle(32), ..small.clone() };
        assert_eq!(check_inclusion(&other, InclusionTarget::Body(&big), 1.0), Err(Error::GridMismatch));
    }

    #[test]
    fn inclusion_in_polytope() {
        let small = disc(0.5);
        let square = RandomPolytope::from_vertices(vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]], false).unwrap();
        assert_eq!(check_inclusion(&small, InclusionTarget::Polytope(&square), 1.0).unwrap().verdict, InclusionVerdict::CertifiedIn);
        let r = check_inclusion(&small, InclusionTarget::Polytope(&square), 0.25).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::CertifiedOut);
        assert!(r.separator.is_some());
    }

    #[test]
    fn regularity_of_gaussian() {
        let g = MeasureSpec::gaussian(2);
        let cal = calibrate_regularity(&DepthSource::Spec(&g), &DirectionGrid::circle(8), &REGULARITY_LADDER).unwrap();
        let expected = 0.5f64.sqrt() / (2.0 / (2.0 * std::f64::consts::PI).sqrt());
        assert!((cal.alpha - expected).abs() < 1e-12, "{}", cal.alpha);
        assert_eq!(cal.worst_p, 1.0);
        assert!(cal.alpha_strong >= 0.5);
    }
}

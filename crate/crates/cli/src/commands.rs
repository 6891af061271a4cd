//! Dispatch from a validated [`RunConfig`] to the library.

use anyhow::{bail, Context, Result};
use tukeylab::bodies::{ball_body, bp_level_set, cramer_transform, zp_plus_body, CramerValue};
use tukeylab::convex::hull_2d;
use tukeylab::depth::{depth, tukey_region, RegionOptions};
use tukeylab::experiments::*;
use tukeylab::polytopes::RandomPolytope;
use tukeylab::rng::derive_seed;
use tukeylab::{ConvexBodyApprox, DepthSource, DirectionBudget, DirectionGrid, MeasureSpec, RadialSearch};

use crate::config::{BodyKind, Command, RunConfig, VcBody};
use crate::svg::Figure;

pub struct RunOutput {
    pub report: ExperimentReport,
    pub figure: Option<Figure>,
    pub summary: String,
}

fn grid(dim: usize, directions: Option<usize>) -> DirectionGrid {
    let m = directions.unwrap_or(if dim == 2 { 256 } else { 512 });
    DirectionGrid::new(dim, m, 0)
}

fn body_of(kind: BodyKind, spec: &MeasureSpec, p: f64, grid: &DirectionGrid) -> Result<ConvexBodyApprox> {
    let source = DepthSource::Spec(spec);
    Ok(match kind {
        BodyKind::Tp => tukey_region(&source, p, grid, &RegionOptions::default())?,
        BodyKind::ZpPlus => zp_plus_body(&source, p, grid)?,
        BodyKind::Bp => bp_level_set(spec, p, grid, &RadialSearch::default())?,
        BodyKind::Kp => ball_body(spec, p, grid)?,
    })
}

fn kind_label(kind: BodyKind) -> &'static str {
    match kind {
        BodyKind::Tp => "T_p",
        BodyKind::ZpPlus => "Z_p^+",
        BodyKind::Bp => "B_p",
        BodyKind::Kp => "K_p",
    }
}

fn planar(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], p[1]]).collect()
}

fn body_polygon(body: &ConvexBodyApprox) -> Vec<[f64; 2]> {
    hull_2d(&body.boundary_points).0
}

fn polytope_figure(fig: &mut Figure, poly: &RandomPolytope, label: &str) -> Result<()> {
    let hull = poly.hull_2d()?;
    fig.shaded_polygon(hull.vertices, label);
    fig.points(planar(&poly.vertices), false);
    Ok(())
}

fn add_overlays(fig: &mut Figure, cfg: &RunConfig, spec: &MeasureSpec, p: f64, g: &DirectionGrid) -> Result<()> {
    for &kind in &cfg.overlays {
        let body = body_of(kind, spec, p, g).with_context(|| format!("overlay {}", kind_label(kind)))?;
        fig.polygon(body_polygon(&body), kind_label(kind));
    }
    Ok(())
}

/// One record per boundary point, with coordinates, support value and radius.
fn body_records(body: &ConvexBodyApprox) -> Vec<TrialRecord> {
    body.boundary_points
        .iter()
        .zip(&body.support_values)
        .enumerate()
        .map(|(i, (b, h))| {
            let mut rec = TrialRecord::new(i, 0, TrialOutcome::Measured).with("support", *h);
            for (k, c) in b.iter().enumerate() {
                rec = rec.with(&format!("x{}", k + 1), *c);
            }
            rec.with("radius", tukeylab::linalg::norm(&tukeylab::linalg::sub(b, &body.center)))
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let want_svg = cfg.emit_svg;
    let mut fig = Figure::default();
    let (report, summary) = match cfg.command {
        Command::Depth => {
            let spec = cfg.measure()?;
            let x = cfg.x()?;
            let budget = DirectionBudget { directions: cfg.directions.unwrap_or(0), seed: cfg.seed, ..Default::default() };
            let est = depth(&DepthSource::Spec(&spec), &x, &budget)?;
            let mut r = ExperimentReport::new("depth", spec.dim(), 0, cfg.seed, cfg)?;
            r.trials.push(TrialRecord::new(0, cfg.seed, TrialOutcome::Measured).with("lower", est.lower).with("upper", est.upper));
            r.aggregate.insert("upper".into(), est.upper);
            r.aggregate.insert("lower".into(), est.lower);
            let method = serde_json::to_value(est.method)?;
            let line = format!("depth {:.6} lower={:.6} method={}", est.upper, est.lower, method.as_str().unwrap_or("?"));
            (r, line)
        }
        Command::Cramer => {
            let spec = cfg.measure()?;
            let x = cfg.x()?;
            let v = cramer_transform(&spec, &x)?;
            let mut r = ExperimentReport::new("cramer", spec.dim(), 0, cfg.seed, cfg)?;
            let mut rec = TrialRecord::new(0, cfg.seed, TrialOutcome::Measured);
            let line = match &v {
                CramerValue::Finite { value, converged, .. } => {
                    rec = rec.with("value", *value).with("converged", *converged as u8 as f64);
                    r.aggregate.insert("value".into(), *value);
                    format!("cramer {value:.10}")
                }
                CramerValue::Infinite { direction } => {
                    rec.separator = Some(direction.clone());
                    r.notes.push("the transform is infinite at x".into());
                    "cramer inf".to_string()
                }
            };
            r.trials.push(rec);
            (r, line)
        }
        Command::Region | Command::Body => {
            let spec = cfg.measure()?;
            let p = cfg.p()?;
            let kind = if cfg.command == Command::Region { BodyKind::Tp } else { cfg.body_kind.unwrap_or(BodyKind::Tp) };
            let g = grid(spec.dim(), cfg.directions);
            let body = body_of(kind, &spec, p, &g)?;
            let mut r = ExperimentReport::new(cfg.command.name(), spec.dim(), 0, cfg.seed, cfg)?;
            r.trials = body_records(&body);
            let radii = body.radii();
            let (rmin, rmax) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            r.aggregate.insert("radius_min".into(), rmin);
            r.aggregate.insert("radius_max".into(), rmax);
            r.aggregate.insert("support_gap".into(), body.support_gap());
            if spec.dim() == 2 {
                r.aggregate.insert("inner_area".into(), body.inner_area()?);
                if want_svg {
                    fig.polygon(body_polygon(&body), kind_label(kind));
                    add_overlays(&mut fig, cfg, &spec, p, &g)?;
                }
            }
            let line = format!("{} {} p={p} points={} radius=[{rmin:.6}, {rmax:.6}]", cfg.command.name(), kind_label(kind), body.len());
            (r, line)
        }
        Command::Inclusion => {
            let spec = cfg.measure()?;
            let icfg = InclusionConfig {
                spec: spec.clone(),
                n_points: cfg.n_points()?,
                beta: cfg.beta.context("beta")?,
                trials: cfg.trials()?,
                seed: cfg.seed,
                directions: cfg.directions,
                region: RegionOptions::default(),
            };
            let r = inclusion_trial(&icfg)?;
            if want_svg && spec.dim() == 2 && r.verdict != Verdict::Vacuous {
                let (p, _) = inclusion_level(2, icfg.n_points, icfg.beta);
                let k = RandomPolytope::sample(&spec, icfg.n_points, false, derive_seed(cfg.seed, 0))?;
                polytope_figure(&mut fig, &k, "K_N")?;
                let g = grid(2, cfg.directions);
                fig.polygon(body_polygon(&tukey_region(&DepthSource::Spec(&spec), p, &g, &RegionOptions::default())?), "T_p");
                add_overlays(&mut fig, cfg, &spec, p, &g)?;
            }
            let line = r.summary();
            (r, line)
        }
        Command::Hlo => {
            let spec = cfg.measure()?;
            let hcfg = HloConfig { spec: spec.clone(), x: cfg.x()?, n_points: cfg.n_points()?, trials: cfg.trials()?, seed: cfg.seed };
            let r = hlo_bound_check(&hcfg)?;
            if want_svg && spec.dim() == 2 {
                let k = RandomPolytope::sample(&spec, hcfg.n_points, false, derive_seed(cfg.seed, 0))?;
                polytope_figure(&mut fig, &k, "K_N")?;
                fig.points(vec![[hcfg.x[0], hcfg.x[1]]], true);
            }
            let line = r.summary();
            (r, line)
        }
        Command::Nmu => {
            let spec = cfg.measure()?;
            let ncfg = NmuConfig { spec: spec.clone(), x: cfg.x()?, trials_per_n: cfg.trials()?, seed: cfg.seed, max_n: cfg.max_n.unwrap_or(1 << 16) };
            let (est, r) = nmu_estimate(&ncfg)?;
            if want_svg && spec.dim() == 2 && est.n_hat >= 3 {
                let k = RandomPolytope::sample(&spec, est.n_hat, false, derive_seed(cfg.seed, 0))?;
                polytope_figure(&mut fig, &k, "K_N at N_hat")?;
                fig.points(vec![[ncfg.x[0], ncfg.x[1]]], true);
            }
            let band = match est.band_hi {
                Some(h) => format!("[{}, {h}]", est.band_lo),
                None => format!("[{}, inf)", est.band_lo),
            };
            let verdict = serde_json::to_value(r.verdict)?;
            let line = format!("nmu {} N_hat={} band={band}", verdict.as_str().unwrap_or("?"), est.n_hat);
            (r, line)
        }
        Command::Volume => {
            let spec = cfg.measure()?;
            let vcfg = VolumeConfig {
                spec: spec.clone(),
                n_list: cfg.n_list.clone().context("N_list")?,
                trials: cfg.trials()?,
                seed: cfg.seed,
                mc_budget: cfg.mc_budget.unwrap_or(20_000),
                window: (0.2, 5.0),
                max_spread: 3.0,
            };
            let r = volume_scaling(&vcfg)?;
            if want_svg && spec.dim() == 2 {
                let big = *vcfg.n_list.iter().max().unwrap_or(&3);
                let k = RandomPolytope::sample(&spec, big, false, derive_seed(derive_seed(cfg.seed, big as u64), 0))?;
                let mut s = k.clone();
                s.symmetric = true;
                fig.shaded_polygon(s.hull_2d()?.vertices, "S_N");
                fig.polygon(k.hull_2d()?.vertices, "K_N");
                fig.points(planar(&k.vertices), false);
            }
            let verdict = serde_json::to_value(r.verdict)?;
            let line = format!(
                "volume {} ratio=[{:.4}, {:.4}] window_ok={}",
                verdict.as_str().unwrap_or("?"),
                r.stat("ratio_min").unwrap_or(f64::NAN),
                r.stat("ratio_max").unwrap_or(f64::NAN),
                r.stat("window_ok") == Some(1.0)
            );
            (r, line)
        }
        Command::Epsnet => {
            let spec = cfg.measure()?;
            let ecfg = EpsnetConfig {
                spec: spec.clone(),
                epsilon: cfg.epsilon.context("epsilon")?,
                gamma: cfg.gamma.context("gamma")?,
                n_points: cfg.n_points()?,
                trials: cfg.trials()?,
                seed: cfg.seed,
                directions: cfg.directions,
            };
            if !(ecfg.epsilon > 0.0 && ecfg.epsilon < 1.0) {
                bail!("epsilon must lie in (0, 1/e), got {}", ecfg.epsilon);
            }
            let body = epsnet_body(&spec, ecfg.epsilon, ecfg.directions)?;
            let r = epsnet_transversal(&ecfg, &body)?;
            if want_svg && spec.dim() == 2 && r.verdict != Verdict::Vacuous {
                let k = RandomPolytope::sample(&spec, ecfg.n_points, false, derive_seed(cfg.seed, 0))?;
                polytope_figure(&mut fig, &k, "K_N")?;
                fig.polygon(body_polygon(&body), "T_p");
            }
            let line = r.summary();
            (r, line)
        }
        Command::Vc => {
            let n = cfg.n.context("n")?;
            let body = match cfg.body.as_ref().context("body")? {
                VcBody::Named(name) => match name.as_str() {
                    "square" if n == 2 => cube_polytope(2)?,
                    "cube" => cube_polytope(n)?,
                    other => bail!("unknown body {other:?} for n = {n}; use \"square\", \"cube\" or {{\"vertices\": ...}}"),
                },
                VcBody::Vertices { vertices } => RandomPolytope::from_vertices(vertices.clone(), false)?,
            };
            if body.dim != n {
                bail!("body dimension {} disagrees with n = {n}", body.dim);
            }
            let vcfg = VcConfig { random_trials: cfg.trials.unwrap_or(100), seed: cfg.seed, directions: cfg.directions.unwrap_or(10_000) };
            let r = vc_shatter_check(&body, &vcfg)?;
            if want_svg && n == 2 {
                fig.shaded_polygon(body.hull_2d()?.vertices, "C");
                let radius = r.stat("radius").unwrap_or(1.0);
                fig.points(vec![[radius, 0.0], [0.0, radius]], true);
            }
            let verdict = serde_json::to_value(r.verdict)?;
            let line = format!(
                "vc {} patterns={}/{} shattered_sets={}",
                verdict.as_str().unwrap_or("?"),
                r.stat("constructed_patterns").unwrap_or(0.0),
                r.stat("required_patterns").unwrap_or(0.0),
                r.stat("shattered_sets").unwrap_or(0.0)
            );
            (r, line)
        }
    };
    let figure = (want_svg && !fig.is_empty()).then_some(fig);
    Ok(RunOutput { report, figure, summary })
}

//! Monte Carlo harnesses on random polytopes.
//!
//! Every harness takes a serializable configuration, runs independent
//! trials with seeds derived from `(seed, trial index)` and returns an
//! [`ExperimentReport`] holding per-trial records, aggregates, the
//! closed-form bound evaluated at the configuration and a verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{check_inclusion, InclusionTarget, InclusionVerdict};
use crate::cloud::PointCloud;
use crate::convex::ConvexBodyApprox;
use crate::depth::{depth, tukey_region, DepthEstimate, DepthSource, DirectionBudget, RegionOptions};
use crate::error::{Error, Result};
use crate::grid::DirectionGrid;
use crate::linalg::{dot, norm};
use crate::measures::MeasureSpec;
use crate::numeric::{mean, wilson_interval, Z_99};
use crate::polytopes::RandomPolytope;
use crate::rng::{derive_seed, task_rng};

// ----- reports ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Pass,
    Fail,
    Abstain,
    Covered,
    Missed,
    Measured,
}

impl TrialOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            TrialOutcome::Pass => "pass",
            TrialOutcome::Fail => "fail",
            TrialOutcome::Abstain => "abstain",
            TrialOutcome::Covered => "covered",
            TrialOutcome::Missed => "missed",
            TrialOutcome::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub witness: Option<Vec<f64>>,
    #[serde(default)]
    pub separator: Option<Vec<f64>>,
}

impl TrialRecord {
    pub fn new(index: usize, seed: u64, outcome: TrialOutcome) -> Self {
        Self { index, seed, outcome, values: BTreeMap::new(), witness: None, separator: None }
    }

    /// Adds a value; non-finite values are dropped.
    pub fn with(mut self, key: &str, value: f64) -> Self {
        put(&mut self.values, key, value);
        self
    }
}

/// Inserts `value` unless it is NaN or infinite, so reports stay valid JSON.
fn put(map: &mut BTreeMap<String, f64>, key: &str, value: f64) {
    if value.is_finite() {
        map.insert(key.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub kind: String,
    pub n: usize,
    /// Sample size used in file names (the largest one for sweeps).
    pub n_points: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub trials: Vec<TrialRecord>,
    pub aggregate: BTreeMap<String, f64>,
    pub theorem_bound: Option<f64>,
    pub verdict: Verdict,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    /// An empty consistent report echoing `config`.
    pub fn new<C: Serialize>(kind: &str, n: usize, n_points: usize, seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            kind: kind.to_string(),
            n,
            n_points,
            seed,
            config: serde_json::to_value(config)?,
            trials: Vec::new(),
            aggregate: BTreeMap::new(),
            theorem_bound: None,
            verdict: Verdict::Consistent,
            notes: Vec::new(),
        })
    }

    fn vacuous(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Vacuous;
        self.notes.push(note.into());
        self
    }

    pub fn file_stem(&self) -> String {
        format!("{}_n{}_N{}_seed{}", self.kind, self.n, self.n_points, self.seed)
    }

    pub fn count(&self, outcome: TrialOutcome) -> usize {
        self.trials.iter().filter(|t| t.outcome == outcome).count()
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.aggregate.get(key).copied()
    }

    /// Column names of [`to_csv`](Self::to_csv) after the fixed prefix.
    pub fn value_columns(&self) -> Vec<String> {
        let keys: BTreeSet<&String> = self.trials.iter().flat_map(|t| t.values.keys()).collect();
        keys.into_iter().cloned().collect()
    }

    /// One row per trial. Missing values are empty cells and vectors are
    /// `;`-joined.
    pub fn to_csv(&self) -> String {
        let cols = self.value_columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index".to_string(), "seed".into(), "outcome".into()];
        header.extend(cols.iter().cloned());
        header.extend(["witness".into(), "separator".into()]);
        w.write_record(&header).expect("writing to memory cannot fail");
        let join = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")).unwrap_or_default();
        for t in &self.trials {
            let mut row = vec![t.index.to_string(), t.seed.to_string(), t.outcome.tag().to_string()];
            row.extend(cols.iter().map(|c| t.values.get(c).map(|v| v.to_string()).unwrap_or_default()));
            row.push(join(&t.witness));
            row.push(join(&t.separator));
            w.write_record(&row).expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory cannot fail")).expect("CSV output is UTF-8")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `report.json` and `results.csv` under `dir/<file_stem>/` and
    /// returns that directory.
    pub fn write_artifacts(&self, dir: &Path) -> Result<PathBuf> {
        let target = dir.join(self.file_stem());
        std::fs::create_dir_all(&target)?;
        std::fs::write(target.join("report.json"), self.to_json()?)?;
        std::fs::write(target.join("results.csv"), self.to_csv())?;
        Ok(target)
    }

    /// Short human-readable summary line.
    pub fn summary(&self) -> String {
        let verdict = match self.verdict {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
            Verdict::Vacuous => "vacuous",
        };
        let mut line = format!("{} {verdict}", self.kind);
        let key = self
            .aggregate
            .get("frequency")
            .map(|v| ("frequency", *v))
            .or_else(|| self.aggregate.get("n_hat").map(|v| ("n_hat", *v)))
            .or_else(|| self.aggregate.iter().next().map(|(k, v)| (k.as_str(), *v)));
        if let Some((k, v)) = key {
            let _ = write!(line, " {k}={v}");
        }
        if let Some(b) = self.theorem_bound {
            let _ = write!(line, " bound={b}");
        }
        line
    }
}

fn run_trials<F>(trials: usize, seed: u64, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, u64) -> Result<TrialRecord> + Sync,
{
    (0..trials).into_par_iter().map(|i| f(i, derive_seed(seed, i as u64))).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    Ok(())
}

fn default_grid(dim: usize, directions: Option<usize>) -> DirectionGrid {
    let m = directions.unwrap_or(if dim == 2 { 256 } else { 512 });
    DirectionGrid::new(dim, m, 0)
}

fn certified_depth(spec: &MeasureSpec, x: &[f64]) -> Result<DepthEstimate> {
    let est = depth(&DepthSource::Spec(spec), x, &DirectionBudget::default())?;
    if !est.is_certified() || est.lower != est.upper {
        return Err(Error::Precondition(format!(
            "depth at {x:?} is only bracketed in [{}, {}]; an exact value is required",
            est.lower, est.upper
        )));
    }
    Ok(est)
}

/// `x in conv(points)`, using an angular-gap test in the plane.
pub fn hull_contains(points: &PointCloud, x: &[f64]) -> Result<bool> {
    if points.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: points.dim(), got: x.len() });
    }
    match x.len() {
        1 => {
            let (lo, hi) = points.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[0]), hi.max(r[0])));
            Ok(lo <= x[0] && x[0] <= hi)
        }
        2 => {
            let mut angles = Vec::with_capacity(points.len());
            for r in points.rows() {
                let (dx, dy) = (r[0] - x[0], r[1] - x[1]);
                if dx == 0.0 && dy == 0.0 {
                    return Ok(true);
                }
                angles.push(dy.atan2(dx));
            }
            if angles.len() < 2 {
                return Ok(false);
            }
            angles.sort_by(f64::total_cmp);
            let wrap = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
            let widest = angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
            Ok(widest <= std::f64::consts::PI)
        }
        _ => Ok(RandomPolytope::from_cloud(points, false).membership(x)?.is_inside()),
    }
}

// ----- depth level sets inside random polytopes --------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    pub spec: MeasureSpec,
    pub n_points: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub region: RegionOptions,
}

/// Level `p = beta ln(N/n)` and the failure bound `exp(-N^{1-beta} n^beta / 2)`.
pub fn inclusion_level(n: usize, n_points: usize, beta: f64) -> (f64, f64) {
    let (n, big) = (n as f64, n_points as f64);
    (beta * (big / n).ln(), (-0.5 * big.powf(1.0 - beta) * n.powf(beta)).exp())
}

/// Samples `K_N` repeatedly and checks `T_p ⊆ K_N`. A trial fails only when
/// a boundary point of `T_p` with certified depth is certified outside.
pub fn inclusion_trial(cfg: &InclusionConfig) -> Result<ExperimentReport> {
    let spec = &cfg.spec;
    let n = spec.dim();
    if cfg.n_points <= n {
        return Err(Error::Precondition(format!("need N > n, got N = {} with n = {n}", cfg.n_points)));
    }
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {}", cfg.beta)));
    }
    check_trials(cfg.trials)?;
    let (p, bound) = inclusion_level(n, cfg.n_points, cfg.beta);
    let mut report = ExperimentReport::new("inclusion", n, cfg.n_points, cfg.seed, cfg)?;
    report.theorem_bound = Some(bound);
    put(&mut report.aggregate, "p", p);
    if cfg.beta > 0.7 {
        report.notes.push(format!("beta = {} exceeds 0.7; the constant c(beta) is not explicit there", cfg.beta));
    }
    let source = DepthSource::Spec(spec);
    let grid = default_grid(n, cfg.directions);
    let region = match tukey_region(&source, p, &grid, &cfg.region) {
        Ok(r) => r,
        Err(Error::EmptyLevelSet { p, p_mu }) => {
            return Ok(report.vacuous(format!("T_p is empty: p = {p} is below p(mu) = {p_mu}")));
        }
        Err(e) => return Err(e),
    };
    let level = (-p).exp();
    let budget = cfg.region.budget;
    report.trials = run_trials(cfg.trials, cfg.seed, |i, s| {
        let k = RandomPolytope::sample(spec, cfg.n_points, false, s)?;
        let check = check_inclusion(&region, InclusionTarget::Polytope(&k), 1.0)?;
        let mut rec = match check.verdict {
            InclusionVerdict::CertifiedIn => TrialRecord::new(i, s, TrialOutcome::Pass),
            InclusionVerdict::Undecided => TrialRecord::new(i, s, TrialOutcome::Abstain),
            InclusionVerdict::CertifiedOut => {
                let w = check.witness.clone().ok_or_else(|| Error::SolverFailure("outside verdict without witness".into()))?;
                let d = depth(&source, &w, &budget)?;
                let outcome = if d.is_certified() && d.lower >= level { TrialOutcome::Fail } else { TrialOutcome::Abstain };
                let mut rec = TrialRecord::new(i, s, outcome).with("witness_depth_lower", d.lower);
                rec.witness = Some(w);
                rec.separator = check.separator.clone();
                rec
            }
        };
        rec = rec.with("worst_support_excess", check.worst_support_excess);
        Ok(rec)
    })?;
    let t = cfg.trials as u64;
    let fails = report.count(TrialOutcome::Fail) as u64;
    let abstains = report.count(TrialOutcome::Abstain) as u64;
    let (lo, hi) = wilson_interval(fails, t, Z_99);
    let agg = &mut report.aggregate;
    put(agg, "failures", fails as f64);
    put(agg, "abstentions", abstains as f64);
    put(agg, "frequency", fails as f64 / t as f64);
    put(agg, "abstention_rate", abstains as f64 / t as f64);
    put(agg, "wilson_lo", lo);
    put(agg, "wilson_hi", hi);
    put(agg, "region_points", region.len() as f64);
    if fails > 0 && lo > bound {
        report.verdict = Verdict::Violated;
    }
    Ok(report)
}

// ----- HLO probability bound ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HloConfig {
    pub spec: MeasureSpec,
    pub x: Vec<f64>,
    pub n_points: usize,
    pub trials: usize,
    pub seed: u64,
}

/// `(N phi / n * exp(1 + phi - N phi / n))^n`, or `None` when `N/n < 1/phi + 1`.
pub fn hlo_bound(n: usize, n_points: usize, phi: f64) -> Option<f64> {
    let ratio = n_points as f64 / n as f64;
    if !(phi > 0.0) || ratio < 1.0 / phi + 1.0 {
        return None;
    }
    let t = ratio * phi;
    Some((t * (1.0 + phi - t).exp()).powi(n as i32))
}

/// Estimates `P(x not in K_N)` and compares it with the closed-form bound.
pub fn hlo_bound_check(cfg: &HloConfig) -> Result<ExperimentReport> {
    let spec = &cfg.spec;
    let n = spec.dim();
    if cfg.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cfg.x.len() });
    }
    check_trials(cfg.trials)?;
    let phi = certified_depth(spec, &cfg.x)?.lower;
    let mut report = ExperimentReport::new("hlo", n, cfg.n_points, cfg.seed, cfg)?;
    put(&mut report.aggregate, "phi", phi);
    let Some(bound) = hlo_bound(n, cfg.n_points, phi) else {
        return Ok(report.vacuous(format!("N/n = {} is below 1/phi + 1 = {}", cfg.n_points as f64 / n as f64, 1.0 / phi + 1.0)));
    };
    report.theorem_bound = Some(bound);
    report.trials = run_trials(cfg.trials, cfg.seed, |i, s| {
        let cloud = spec.sample(cfg.n_points, s)?;
        let outcome = if hull_contains(&cloud, &cfg.x)? { TrialOutcome::Covered } else { TrialOutcome::Missed };
        Ok(TrialRecord::new(i, s, outcome))
    })?;
    let misses = report.count(TrialOutcome::Missed) as u64;
    let (lo, hi) = wilson_interval(misses, cfg.trials as u64, Z_99);
    let agg = &mut report.aggregate;
    put(agg, "misses", misses as f64);
    put(agg, "frequency", misses as f64 / cfg.trials as f64);
    put(agg, "wilson_lo", lo);
    put(agg, "wilson_hi", hi);
    if lo > bound {
        report.verdict = Verdict::Violated;
    }
    Ok(report)
}

// ----- N_mu search ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmuConfig {
    pub spec: MeasureSpec,
    pub x: Vec<f64>,
    pub trials_per_n: usize,
    pub seed: u64,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
}

fn default_max_n() -> usize {
    1 << 16
}

/// Outcome of the search for `N_mu(x) = min{N : P(x in K_N) >= 1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmuEstimate {
    /// Smallest evaluated `N` whose coverage is not confidently below 1/2.
    pub n_hat: usize,
    /// Confidence band `[band_lo, band_hi]` for `N_mu`; `band_hi` is absent
    /// when no evaluated `N` had coverage confidently above 1/2.
    pub band_lo: usize,
    pub band_hi: Option<usize>,
    pub decided: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Ambiguous,
    Above,
}

struct CoverageTable<'a> {
    cfg: &'a NmuConfig,
    seeds: Vec<u64>,
    rows: BTreeMap<usize, (u64, Side)>,
}

impl CoverageTable<'_> {
    /// Trial `t` always uses the same seed, so its sample for `N` is a
    /// prefix of its sample for any larger `N` and coverage is monotone.
    fn side(&mut self, big_n: usize) -> Result<Side> {
        if let Some(&(_, side)) = self.rows.get(&big_n) {
            return Ok(side);
        }
        let cfg = self.cfg;
        let hits: u64 = self
            .seeds
            .par_iter()
            .map(|&s| -> Result<u64> { Ok(hull_contains(&cfg.spec.sample(big_n, s)?, &cfg.x)? as u64) })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        let (lo, hi) = wilson_interval(hits, self.seeds.len() as u64, Z_99);
        let side = if hi < 0.5 {
            Side::Below
        } else if lo >= 0.5 {
            Side::Above
        } else {
            Side::Ambiguous
        };
        self.rows.insert(big_n, (hits, side));
        Ok(side)
    }

    /// Smallest `N` in `(lo, hi]` with `pred`, given `pred(hi)` and `!pred(lo)`.
    fn bisect(&mut self, mut lo: usize, mut hi: usize, pred: impl Fn(Side) -> bool) -> Result<usize> {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(self.side(mid)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Smallest `N >= start` with `pred`, by doubling the step then bisecting.
    fn first_from(&mut self, start: usize, pred: impl Fn(Side) -> bool + Copy) -> Result<Option<usize>> {
        if pred(self.side(start)?) {
            return Ok(Some(start));
        }
        let (mut last_fail, mut step) = (start, 1);
        loop {
            let probe = start + step;
            if probe > self.cfg.max_n {
                return Ok(None);
            }
            if pred(self.side(probe)?) {
                return self.bisect(last_fail, probe, pred).map(Some);
            }
            last_fail = probe;
            step *= 2;
        }
    }
}

/// Searches for `N_mu(x)` and checks it against `1/(2 phi)` and
/// `(6n/phi)(1 + ln(1/phi))`.
pub fn nmu_estimate(cfg: &NmuConfig) -> Result<(NmuEstimate, ExperimentReport)> {
    let spec = &cfg.spec;
    let n = spec.dim();
    if cfg.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cfg.x.len() });
    }
    check_trials(cfg.trials_per_n)?;
    if cfg.max_n == 0 {
        return Err(Error::InvalidArgument("max_n must be positive".into()));
    }
    let phi = certified_depth(spec, &cfg.x)?.lower;
    if phi <= 0.0 {
        return Err(Error::Precondition(format!("x = {:?} has zero depth, so N_mu is infinite", cfg.x)));
    }
    let seeds: Vec<u64> = (0..cfg.trials_per_n as u64).map(|t| derive_seed(cfg.seed, t)).collect();
    let mut table = CoverageTable { cfg, seeds, rows: BTreeMap::new() };
    let n_hat = table.first_from(1, |s| s != Side::Below)?;
    let band_hi = match n_hat {
        Some(start) => table.first_from(start, |s| s == Side::Above)?,
        None => None,
    };
    let largest = table.rows.keys().next_back().copied().unwrap_or(1);
    let estimate = NmuEstimate {
        n_hat: n_hat.unwrap_or(largest + 1),
        band_lo: n_hat.unwrap_or(largest + 1),
        band_hi,
        decided: n_hat.is_some() && band_hi.is_some(),
    };

    let mut report = ExperimentReport::new("nmu", n, band_hi.unwrap_or(estimate.n_hat), cfg.seed, cfg)?;
    let trials = cfg.trials_per_n as u64;
    report.trials = table
        .rows
        .iter()
        .map(|(&big_n, &(hits, side))| {
            let (lo, hi) = wilson_interval(hits, trials, Z_99);
            let position = match side {
                Side::Below => -1.0,
                Side::Ambiguous => 0.0,
                Side::Above => 1.0,
            };
            TrialRecord::new(big_n, cfg.seed, TrialOutcome::Measured)
                .with("N", big_n as f64)
                .with("hits", hits as f64)
                .with("coverage", hits as f64 / trials as f64)
                .with("wilson_lo", lo)
                .with("wilson_hi", hi)
                .with("side", position)
        })
        .collect();
    let upper = 6.0 * n as f64 / phi * (1.0 + (1.0 / phi).ln());
    let lower = 0.5 / phi;
    let three = (3.0 * n as f64 / phi).ceil();
    report.theorem_bound = Some(upper);
    let agg = &mut report.aggregate;
    put(agg, "phi", phi);
    put(agg, "n_hat", estimate.n_hat as f64);
    put(agg, "band_lo", estimate.band_lo as f64);
    if let Some(h) = band_hi {
        put(agg, "band_hi", h as f64);
    }
    put(agg, "lower_bound", lower);
    put(agg, "upper_bound", upper);
    put(agg, "ceil_3n_over_phi", three);
    put(agg, "n_hat_times_phi", estimate.n_hat as f64 * phi);
    put(agg, "decided", estimate.decided as u8 as f64);
    if !estimate.decided {
        report.notes.push(format!("N_mu is undecided within max_n = {}", cfg.max_n));
    }
    if let Some(h) = band_hi {
        if (h as f64) < lower {
            report.verdict = Verdict::Violated;
            report.notes.push(format!("band [{}, {h}] lies below 1/(2 phi) = {lower}", estimate.band_lo));
        }
        if (h as f64) > three {
            report.notes.push(format!("band_hi = {h} exceeds ceil(3n/phi) = {three}"));
        }
    }
    if estimate.band_lo as f64 > upper {
        report.verdict = Verdict::Violated;
        report.notes.push(format!("band starts at {} above the upper bound {upper}", estimate.band_lo));
    }
    Ok((estimate, report))
}

// ----- volume scaling ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    pub spec: MeasureSpec,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Hit-or-miss budget per polytope when `n >= 3`.
    #[serde(default = "default_volume_budget")]
    pub mc_budget: usize,
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    #[serde(default = "default_spread")]
    pub max_spread: f64,
}

fn default_volume_budget() -> usize {
    20_000
}

fn default_window() -> (f64, f64) {
    (0.2, 5.0)
}

fn default_spread() -> f64 {
    3.0
}

fn polytope_volume(p: &RandomPolytope, budget: usize, seed: u64) -> Result<f64> {
    if p.dim == 2 {
        p.area_2d()
    } else {
        Ok(p.volume_mc(budget, seed)?.0)
    }
}

/// Mean `vol(K_N)^{1/n}` and `vol(S_N)^{1/n}` against `sqrt(ln N / n)`.
pub fn volume_scaling(cfg: &VolumeConfig) -> Result<ExperimentReport> {
    let spec = &cfg.spec;
    let n = spec.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("volume scaling supports n in {{2, 3}}, got {n}")));
    }
    check_trials(cfg.trials)?;
    if cfg.n_list.is_empty() || cfg.n_list.iter().any(|&m| m <= n) {
        return Err(Error::Precondition("every N in the list must exceed n".into()));
    }
    let largest = *cfg.n_list.iter().max().unwrap_or(&0);
    let mut report = ExperimentReport::new("volume", n, largest, cfg.seed, cfg)?;
    let density_root = spec.density_sup().ok().filter(|f| f.is_finite() && *f > 0.0).map(|f| f.powf(1.0 / n as f64));
    let exact = n == 2;
    let nf = n as f64;
    let mut ratios = Vec::new();
    let mut lower_constant = f64::INFINITY;
    let mut shrink = 0usize;
    for (j, &big_n) in cfg.n_list.iter().enumerate() {
        let block_seed = derive_seed(cfg.seed, big_n as u64);
        let rows = run_trials(cfg.trials, block_seed, |i, s| {
            let k = RandomPolytope::sample(spec, big_n, false, s)?;
            let mut sym = k.clone();
            sym.symmetric = true;
            let vk = polytope_volume(&k, cfg.mc_budget, derive_seed(s, 1))?;
            let vs = polytope_volume(&sym, cfg.mc_budget, derive_seed(s, 2))?;
            Ok(TrialRecord::new(j * cfg.trials + i, s, TrialOutcome::Measured)
                .with("N", big_n as f64)
                .with("vol_k", vk)
                .with("vol_s", vs)
                .with("vol_k_root", vk.powf(1.0 / nf))
                .with("vol_s_root", vs.powf(1.0 / nf)))
        })?;
        let roots_k: Vec<f64> = rows.iter().map(|r| r.values["vol_k_root"]).collect();
        let roots_s: Vec<f64> = rows.iter().map(|r| r.values["vol_s_root"]).collect();
        shrink += rows.iter().filter(|r| r.values["vol_s"] < r.values["vol_k"] * (1.0 - 1e-12)).count();
        let (mk, ms) = (mean(&roots_k), mean(&roots_s));
        let ratio = mk / ((big_n as f64).ln().sqrt() / nf.sqrt());
        ratios.push(ratio);
        let agg = &mut report.aggregate;
        put(agg, &format!("mean_root_k_N{big_n}"), mk);
        put(agg, &format!("mean_root_s_N{big_n}"), ms);
        put(agg, &format!("ratio_N{big_n}"), ratio);
        let scale = ((big_n as f64 / nf).ln() / nf).sqrt();
        put(agg, &format!("scale_ln_N_over_n_N{big_n}"), scale);
        if let Some(d) = density_root {
            lower_constant = lower_constant.min(mk * d / scale);
        }
        report.trials.extend(rows);
    }
    let (rmin, rmax) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    let window_ok = rmin >= cfg.window.0 && rmax <= cfg.window.1 && rmax / rmin <= cfg.max_spread;
    let agg = &mut report.aggregate;
    put(agg, "ratio_min", rmin);
    put(agg, "ratio_max", rmax);
    put(agg, "ratio_spread", rmax / rmin);
    put(agg, "window_ok", window_ok as u8 as f64);
    put(agg, "symmetric_shrink_count", shrink as f64);
    put(agg, "lower_constant", lower_constant);
    if cfg.n_list.contains(&(n + 1)) {
        report.notes.push("N = n + 1 is the trivial end: a simplex, positive volume almost surely".into());
    }
    if !window_ok {
        report.notes.push(format!("ratio window [{}, {}] or spread {} not met", cfg.window.0, cfg.window.1, cfg.max_spread));
    }
    if shrink > 0 && exact {
        report.verdict = Verdict::Violated;
        report.notes.push(format!("{shrink} trials had vol(S_N) < vol(K_N)"));
    }
    if !exact {
        report.notes.push("volumes for n = 3 are hit-or-miss estimates".into());
    }
    Ok(report)
}

// ----- epsilon-net transversals --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsnetConfig {
    pub spec: MeasureSpec,
    pub epsilon: f64,
    pub gamma: f64,
    pub n_points: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub directions: Option<usize>,
}

/// `1 - 4 (11 gamma^2 eps^{gamma - 2})^d`.
pub fn epsnet_bound(d: usize, epsilon: f64, gamma: f64) -> f64 {
    1.0 - 4.0 * (11.0 * gamma * gamma * epsilon.powf(gamma - 2.0)).powi(d as i32)
}

/// `gamma (d / eps) ln(1 / eps)`.
pub fn epsnet_threshold(d: usize, epsilon: f64, gamma: f64) -> f64 {
    gamma * d as f64 / epsilon * (1.0 / epsilon).ln()
}

/// The level set `T_p` with `e^{-p} = epsilon`, the usual body for
/// [`epsnet_transversal`].
pub fn epsnet_body(spec: &MeasureSpec, epsilon: f64, directions: Option<usize>) -> Result<ConvexBodyApprox> {
    let grid = default_grid(spec.dim(), directions);
    tukey_region(&DepthSource::Spec(spec), (1.0 / epsilon).ln(), &grid, &RegionOptions::default())
}

/// Frequency with which `N` samples meet every supporting half-space of
/// `body`, that is `body ⊆ conv(sample)`.
pub fn epsnet_transversal(cfg: &EpsnetConfig, body: &ConvexBodyApprox) -> Result<ExperimentReport> {
    let spec = &cfg.spec;
    let d = spec.dim();
    if body.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: body.dim() });
    }
    let e_max = (-1.0f64).exp();
    if !(cfg.epsilon > 0.0 && cfg.epsilon < e_max) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/e), got {}", cfg.epsilon)));
    }
    if !(cfg.gamma > 2.0 && cfg.gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must exceed 2, got {}", cfg.gamma)));
    }
    check_trials(cfg.trials)?;
    let bound = epsnet_bound(d, cfg.epsilon, cfg.gamma);
    let mut report = ExperimentReport::new("epsnet", d, cfg.n_points, cfg.seed, cfg)?;
    put(&mut report.aggregate, "bound_raw", bound);
    if bound <= 0.0 {
        return Ok(report.vacuous(format!("success bound {bound} is not positive")));
    }
    report.theorem_bound = Some(bound);
    let threshold = epsnet_threshold(d, cfg.epsilon, cfg.gamma);
    if (cfg.n_points as f64) < threshold {
        return Err(Error::Precondition(format!("N = {} is below gamma (d/eps) ln(1/eps) = {threshold}", cfg.n_points)));
    }
    let light = body
        .grid
        .iter()
        .map(|u| Ok(spec.halfspace_mass(u, body.inner_support(u))?.value))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    put(&mut report.aggregate, "lightest_halfspace", light);
    if light < cfg.epsilon * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "a supporting half-space of the body has mass {light} below epsilon = {}",
            cfg.epsilon
        )));
    }
    report.trials = run_trials(cfg.trials, cfg.seed, |i, s| {
        let k = RandomPolytope::sample(spec, cfg.n_points, false, s)?;
        let check = check_inclusion(body, InclusionTarget::Polytope(&k), 1.0)?;
        let mut rec = match check.verdict {
            InclusionVerdict::CertifiedIn => TrialRecord::new(i, s, TrialOutcome::Pass),
            InclusionVerdict::CertifiedOut => TrialRecord::new(i, s, TrialOutcome::Fail),
            InclusionVerdict::Undecided => TrialRecord::new(i, s, TrialOutcome::Abstain),
        };
        rec.witness = check.witness;
        rec.separator = check.separator;
        Ok(rec.with("worst_support_excess", check.worst_support_excess))
    })?;
    let t = cfg.trials as u64;
    let wins = report.count(TrialOutcome::Pass) as u64;
    let (lo, hi) = wilson_interval(wins, t, Z_99);
    let agg = &mut report.aggregate;
    put(agg, "successes", wins as f64);
    put(agg, "abstentions", report.trials.iter().filter(|r| r.outcome == TrialOutcome::Abstain).count() as f64);
    put(agg, "frequency", wins as f64 / t as f64);
    put(agg, "wilson_lo", lo);
    put(agg, "wilson_hi", hi);
    put(agg, "threshold", threshold);
    if hi < bound {
        report.verdict = Verdict::Violated;
    }
    Ok(report)
}

// ----- VC dimension of supporting half-spaces --------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcConfig {
    pub random_trials: usize,
    pub seed: u64,
    #[serde(default = "default_vc_directions")]
    pub directions: usize,
}

fn default_vc_directions() -> usize {
    10_000
}

/// The cube `[-1, 1]^n` as a vertex list.
pub fn cube_polytope(n: usize) -> Result<RandomPolytope> {
    let vertices = (0..1usize << n).map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect();
    RandomPolytope::from_vertices(vertices, false)
}

/// Bit `i` is set when `points[i]` lies in `{y : <y, u> >= h(u)}`.
fn pattern(body: &RandomPolytope, points: &[Vec<f64>], u: &[f64]) -> usize {
    let h = body.support(u);
    points.iter().enumerate().filter(|(_, y)| dot(y, u) >= h).fold(0, |acc, (i, _)| acc | (1 << i))
}

/// Checks that the half-spaces `{<y, u> >= h_C(u)}` shatter the constructed
/// `n`-point set and that random `(n+1)`-point sets are not shattered.
pub fn vc_shatter_check(body: &RandomPolytope, cfg: &VcConfig) -> Result<ExperimentReport> {
    let n = body.dim;
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("shattering checks support n in {{2, 3}}, got {n}")));
    }
    if cfg.directions == 0 {
        return Err(Error::InvalidArgument("the direction grid must be nonempty".into()));
    }
    let mut report = ExperimentReport::new("vc", n, n + 1, cfg.seed, cfg)?;
    let m = body.generators().iter().map(|v| norm(v)).fold(0.0, f64::max);
    let r = (1.0 + m) * (n as f64).sqrt();
    let constructed: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| if k == i { r } else { 0.0 }).collect()).collect();
    let mut realized = vec![false; 1 << n];
    for mask in 0..1usize << n {
        let u: Vec<f64> = (0..n).map(|k| (if mask >> k & 1 == 1 { 1.0 } else { -1.0 }) / (n as f64).sqrt()).collect();
        let got = pattern(body, &constructed, &u);
        realized[got] = true;
        if got != mask {
            report.notes.push(format!("sign pattern {mask:b} produced subset {got:b}"));
        }
    }
    let constructed_count = realized.iter().filter(|&&b| b).count();
    let grid = DirectionGrid::new(n, cfg.directions, cfg.seed);
    report.trials = run_trials(cfg.random_trials, cfg.seed, |i, s| {
        let mut rng = task_rng(s, 0);
        let points: Vec<Vec<f64>> = (0..=n).map(|_| (0..n).map(|_| r * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let mut seen = vec![false; 1 << (n + 1)];
        for u in grid.iter() {
            seen[pattern(body, &points, u)] = true;
        }
        let count = seen.iter().filter(|&&b| b).count();
        let outcome = if count == 1 << (n + 1) { TrialOutcome::Fail } else { TrialOutcome::Pass };
        let mut rec = TrialRecord::new(i, s, outcome).with("patterns", count as f64);
        rec.witness = Some(points.concat());
        Ok(rec)
    })?;
    let shattered = report.count(TrialOutcome::Fail);
    let agg = &mut report.aggregate;
    put(agg, "radius", r);
    put(agg, "constructed_patterns", constructed_count as f64);
    put(agg, "required_patterns", (1usize << n) as f64);
    put(agg, "shattered_sets", shattered as f64);
    let max_seen = report.trials.iter().map(|t| t.values["patterns"]).fold(0.0, f64::max);
    put(&mut report.aggregate, "max_patterns", max_seen);
    if constructed_count < 1 << n || shattered > 0 {
        report.verdict = Verdict::Violated;
    }
    if cfg.random_trials > 0 {
        report.notes.push("absence of shattered random sets is evidence, not proof".into());
    }
    Ok(report)
}

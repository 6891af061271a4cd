//! Harness behavior on small configurations with known answers.

mod common;

use common::*;
use tukeylab::experiments::*;
use tukeylab::polytopes::RandomPolytope;
use tukeylab::*;

fn inclusion(spec: MeasureSpec, n_points: usize, beta: f64, trials: usize) -> InclusionConfig {
    InclusionConfig { spec, n_points, beta, trials, seed: 31, directions: Some(64), region: Default::default() }
}

#[test]
fn inclusion_preconditions_and_empty_levels() {
    let err = inclusion_trial(&inclusion(MeasureSpec::gaussian(2), 2, 0.5, 5)).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    assert!(inclusion_trial(&inclusion(MeasureSpec::gaussian(2), 10, 1.0, 5)).is_err());

    let triangle = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 0).unwrap();
    let r = inclusion_trial(&inclusion(MeasureSpec::empirical(triangle), 50, 0.3, 100)).unwrap();
    // The deepest point of three atoms has depth 1/3, above e^{-p} only once p >= ln 3.
    assert!(0.3 * 25f64.ln() < 3f64.ln());
    assert_eq!(r.verdict, Verdict::Vacuous);

    let r = inclusion_trial(&inclusion(MeasureSpec::gaussian(2), 40, 0.9, 3)).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("0.7")));
}

#[test]
fn certified_failures_carry_reproducible_witnesses() {
    let cfg = inclusion(MeasureSpec::gaussian(2), 16, 0.5, 60);
    let r = inclusion_trial(&cfg).unwrap();
    let failures: Vec<_> = r.trials.iter().filter(|t| t.outcome == TrialOutcome::Fail).collect();
    assert!(!failures.is_empty(), "small polytopes should miss part of the level set");
    let flagged = r.stat("wilson_lo").unwrap() > r.theorem_bound.unwrap();
    assert_eq!(r.verdict == Verdict::Violated, flagged);
    for t in failures {
        let k = RandomPolytope::sample(&cfg.spec, cfg.n_points, false, t.seed).unwrap();
        let w = t.witness.as_ref().unwrap();
        assert!(!k.membership(w).unwrap().is_inside());
        let s = t.separator.as_ref().unwrap();
        let gap: f64 = w.iter().zip(s).map(|(a, b)| a * b).sum::<f64>() - k.support(s);
        assert!(gap > 0.0);
    }
}

#[test]
fn hlo_examples() {
    let g = MeasureSpec::gaussian(2);
    let vac = hlo_bound_check(&HloConfig { spec: g.clone(), x: vec![0.0, 0.0], n_points: 4, trials: 10, seed: 1 }).unwrap();
    assert_eq!(vac.verdict, Verdict::Vacuous);

    let r = hlo_bound_check(&HloConfig { spec: g.clone(), x: vec![0.0, 0.0], n_points: 12, trials: 20_000, seed: 1 }).unwrap();
    assert!((r.theorem_bound.unwrap() - (3.0 * (-1.5f64).exp()).powi(2)).abs() < 1e-12);
    let exact = planar_origin_miss(12);
    assert!(r.stat("wilson_lo").unwrap() <= exact && exact <= r.stat("wilson_hi").unwrap());
    assert_eq!(r.verdict, Verdict::Consistent);

    for x in [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]] {
        let r = hlo_bound_check(&HloConfig { spec: g.clone(), x: x.to_vec(), n_points: 32, trials: 20_000, seed: 2 }).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent, "x = {x:?}");
    }

    let square = PointCloud::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]], 0).unwrap();
    let r = hlo_bound_check(&HloConfig { spec: MeasureSpec::empirical(square), x: vec![0.0, 0.0], n_points: 20, trials: 20_000, seed: 3 }).unwrap();
    assert_eq!(r.stat("phi"), Some(0.5));
    assert_eq!(r.verdict, Verdict::Consistent);

    let cube = hlo_bound_check(&HloConfig { spec: MeasureSpec::cube(3), x: vec![0.1, 0.0, 0.0], n_points: 20, trials: 10, seed: 3 });
    assert!(matches!(cube, Err(Error::Precondition(_))));
}

#[test]
fn coverage_is_monotone_under_prefix_coupling() {
    let spec = MeasureSpec::gaussian(2);
    let x = [0.8, -0.3];
    for seed in 0..200u64 {
        let cloud = spec.sample(64, seed).unwrap();
        let mut covered = false;
        for m in 1..=64 {
            let now = hull_contains(&cloud.prefix(m), &x).unwrap();
            assert!(!covered || now, "coverage dropped at N = {m}");
            assert_eq!(cloud.prefix(m), spec.sample(m, seed).unwrap());
            covered = now;
        }
    }
}

#[test]
fn nmu_in_one_dimension() {
    let (est, r) = nmu_estimate(&NmuConfig { spec: MeasureSpec::cube(1), x: vec![0.0], trials_per_n: 5000, seed: 9, max_n: 1024 }).unwrap();
    assert_eq!(est.n_hat, 2);
    assert!(0.5 <= est.n_hat as f64 * 0.5);
    assert_eq!(r.verdict, Verdict::Consistent);
    let budgeted = nmu_estimate(&NmuConfig { spec: MeasureSpec::gaussian(2), x: vec![2.0, 0.0], trials_per_n: 2000, seed: 9, max_n: 8 }).unwrap();
    assert!(!budgeted.0.decided);
}

#[test]
fn volume_flags_the_simplex_end() {
    let cfg = VolumeConfig { spec: MeasureSpec::gaussian(2), n_list: vec![3, 30], trials: 50, seed: 4, mc_budget: 0, window: (0.0, 100.0), max_spread: 100.0 };
    let r = volume_scaling(&cfg).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("n + 1")));
    assert!(r.trials.iter().all(|t| t.values["vol_k"] > 0.0 && t.values["vol_s"] >= t.values["vol_k"]));
    assert_eq!(r.trials.len(), 100);
}

#[test]
fn epsnet_examples() {
    let g = MeasureSpec::gaussian(2);
    let body = epsnet_body(&g, 0.05, Some(64)).unwrap();
    let cfg = EpsnetConfig { spec: g.clone(), epsilon: 0.05, gamma: 3.0, n_points: 10, trials: 5, seed: 1, directions: Some(64) };
    assert_eq!(epsnet_transversal(&cfg, &body).unwrap().verdict, Verdict::Vacuous);

    let body = epsnet_body(&g, 0.01, Some(64)).unwrap();
    let short = EpsnetConfig { epsilon: 0.01, gamma: 4.0, n_points: 3000, ..cfg.clone() };
    assert!(matches!(epsnet_transversal(&short, &body), Err(Error::Precondition(_))));

    let big = epsnet_body(&g, 0.001, Some(64)).unwrap();
    let light = EpsnetConfig { spec: g, epsilon: 0.01, gamma: 4.0, n_points: 3700, trials: 2, seed: 1, directions: Some(64) };
    assert!(matches!(epsnet_transversal(&light, &big), Err(Error::Precondition(_))));
}

#[test]
fn reports_round_trip_and_write_artifacts() {
    let r = hlo_bound_check(&HloConfig { spec: MeasureSpec::gaussian(2), x: vec![0.3, 0.1], n_points: 24, trials: 50, seed: 8 }).unwrap();
    let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    let dir = tempfile::tempdir().unwrap();
    let out = r.write_artifacts(dir.path()).unwrap();
    assert!(out.ends_with("hlo_n2_N24_seed8"));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv, r.to_csv());
    assert_eq!(csv.lines().count(), 51);
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert_eq!(ExperimentReport::from_json(&json).unwrap(), r);
}

//! Property-based checks on random inputs.

use proptest::prelude::*;
use tukeylab::bodies::{cramer_transform, zp_plus_support};
use tukeylab::depth::depth_empirical_2d;
use tukeylab::experiments::{hull_contains, ExperimentReport};
use tukeylab::numeric::wilson_interval;
use tukeylab::polytopes::RandomPolytope;
use tukeylab::*;

fn cloud_2d() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 3..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_depth_is_affine_invariant(
        rows in cloud_2d(),
        m in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform2(-3.0f64..3.0),
        x in prop::array::uniform2(-4.0f64..4.0),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.2);
        let map = |p: &[f64]| vec![m[0] * p[0] + m[1] * p[1] + b[0], m[2] * p[0] + m[3] * p[1] + b[1]];
        let cloud = PointCloud::from_rows(&rows, 0).unwrap();
        let image = PointCloud::from_rows(&rows.iter().map(|r| map(r)).collect::<Vec<_>>(), 0).unwrap();
        let before = depth_empirical_2d(&cloud, &x).unwrap();
        let after = depth_empirical_2d(&image, &map(&x)).unwrap();
        prop_assert!((0.0..=1.0).contains(&before.upper));
        prop_assert_eq!(before.upper, after.upper);
    }

    #[test]
    fn planar_hull_test_matches_linear_programming(rows in cloud_2d(), x in prop::array::uniform2(-6.0f64..6.0)) {
        let cloud = PointCloud::from_rows(&rows, 0).unwrap();
        let lp = RandomPolytope::from_cloud(&cloud, false).membership(&x).unwrap().is_inside();
        prop_assert_eq!(hull_contains(&cloud, &x).unwrap(), lp);
    }

    #[test]
    fn centroid_support_is_positively_homogeneous(rows in cloud_2d(), theta in 0.0f64..std::f64::consts::TAU, lambda in 0.1f64..10.0, p in 1.0f64..6.0) {
        let cloud = PointCloud::from_rows(&rows, 0).unwrap();
        let u = [theta.cos(), theta.sin()];
        let h = zp_plus_support(&DepthSource::Cloud(&cloud), p, &u).unwrap();
        let scaled = zp_plus_support(&DepthSource::Cloud(&cloud), p, &[lambda * u[0], lambda * u[1]]).unwrap();
        prop_assert!((scaled - lambda * h).abs() <= 1e-10 * (1.0 + scaled.abs()));
    }

    #[test]
    fn cramer_transform_is_nonnegative(x in prop::array::uniform2(-0.95f64..0.95)) {
        let v = cramer_transform(&MeasureSpec::cube(2), &x).unwrap().value();
        prop_assert!(v >= -1e-12);
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(k in 0u64..500, extra in 0u64..500) {
        let n = k + extra + 1;
        let (lo, hi) = wilson_interval(k, n, 2.5758);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12 && 0.0 <= lo && hi <= 1.0);
    }

    #[test]
    fn point_clouds_survive_csv(rows in cloud_2d()) {
        let cloud = PointCloud::from_rows(&rows, 3).unwrap();
        prop_assert_eq!(PointCloud::from_csv(&cloud.to_csv(), 3).unwrap(), cloud);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reports_survive_json(seed in any::<u64>(), trials in 1usize..20) {
        let cfg = tukeylab::experiments::HloConfig { spec: MeasureSpec::gaussian(2), x: vec![0.2, -0.1], n_points: 16, trials, seed };
        let r = tukeylab::experiments::hlo_bound_check(&cfg).unwrap();
        prop_assert_eq!(ExperimentReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}

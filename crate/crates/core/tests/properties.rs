use condks::{
    asymptotic_cdf, classic_ks_test, conditional_ks_test, critical_value, exact_cdf,
    ks_statistic_uniform, p_value, ConditionalCdf, FixedZeta, Mode, NormalLocation,
    ObservationPair, SortedUnitSample, TestKind, TestReport, UniformWidth,
};
use proptest::prelude::*;

fn unit_sample(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_cdf_is_monotone_and_bounded(n in 1usize..300, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let fl = exact_cdf(n, lo).unwrap();
        let fh = exact_cdf(n, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh + 1e-13, "n={} F({})={} F({})={}", n, lo, fl, hi, fh);
    }

    #[test]
    fn p_value_complements_cdf(n in 1usize..200, d in 0.0f64..=1.0) {
        let p = p_value(d, n, Mode::Exact).unwrap();
        prop_assert!((p + exact_cdf(n, d).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_cdf_is_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(asymptotic_cdf(lo) <= asymptotic_cdf(hi) + 1e-15);
    }

    #[test]
    fn statistic_range_and_symmetries(u in unit_sample(60), rot in 0usize..60) {
        let n = u.len() as f64;
        let d = ks_statistic_uniform(&SortedUnitSample::new(u.clone()).unwrap());
        prop_assert!(d >= 0.5 / n - 1e-15 && d <= 1.0);

        let mut shuffled = u.clone();
        shuffled.rotate_left(rot % u.len());
        shuffled.reverse();
        let d2 = ks_statistic_uniform(&SortedUnitSample::new(shuffled).unwrap());
        prop_assert_eq!(d.to_bits(), d2.to_bits());

        let mirrored: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        let d3 = ks_statistic_uniform(&SortedUnitSample::new(mirrored).unwrap());
        prop_assert!((d - d3).abs() < 1e-12);
    }

    #[test]
    fn pinned_family_reduces_to_classic(
        xs in prop::collection::vec(-5.0f64..5.0, 1..50),
        zs in prop::collection::vec(-5.0f64..5.0, 50),
        zeta in -3.0f64..3.0,
        sigma in 0.1f64..4.0,
    ) {
        let family = NormalLocation::new(sigma).unwrap();
        let pairs: Vec<ObservationPair> =
            xs.iter().zip(&zs).map(|(&x, &z)| ObservationPair::new(x, z)).collect();
        let pinned = FixedZeta { family, zeta };
        let c = conditional_ks_test(&pairs, &pinned, 0.05, Mode::Auto).unwrap();
        let k = classic_ks_test(&xs, |x| family.cdf(x, zeta), 0.05, Mode::Auto).unwrap();
        prop_assert_eq!(c.statistic.to_bits(), k.statistic.to_bits());
        prop_assert_eq!(c.p_value.to_bits(), k.p_value.to_bits());
    }

    #[test]
    fn uniform_width_transform_is_a_shift(
        ys in prop::collection::vec(0.0f64..1.0, 1..40),
        zs in prop::collection::vec(-100.0f64..100.0, 40),
    ) {
        let pairs: Vec<ObservationPair> =
            ys.iter().zip(&zs).map(|(&y, &z)| ObservationPair::new(y + z, z)).collect();
        let c = conditional_ks_test(&pairs, &UniformWidth, 0.05, Mode::Exact).unwrap();
        let direct = ks_statistic_uniform(&SortedUnitSample::new(ys).unwrap());
        prop_assert!((c.statistic - direct).abs() < 1e-12);
    }

    #[test]
    fn rejection_is_monotone_in_alpha(n in 1usize..150, d in 0.0f64..=1.0, a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r = TestReport::from_statistic(TestKind::Classic, d, n, lo, Mode::Auto).unwrap();
        let r_hi = r.at_level(hi).unwrap();
        prop_assert!(!r.reject || r_hi.reject);
    }

    #[test]
    fn rejection_matches_critical_value(n in 1usize..120, alpha in 0.005f64..0.5, d in 0.0f64..=1.0) {
        let cv = critical_value(n, alpha).unwrap();
        // skip a thin band where the bisection tolerance decides
        prop_assume!((d - cv).abs() > 1e-9);
        let r = TestReport::from_statistic(TestKind::Classic, d, n, alpha, Mode::Exact).unwrap();
        prop_assert_eq!(r.reject, d > cv);
    }
}

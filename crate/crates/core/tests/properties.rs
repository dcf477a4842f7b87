use gpcs::geometry::{BivariatePoint, BivariateSample};
use gpcs::inference::{plugin_ci, VarianceVariant};
use gpcs::klines::KlinesConfig;
use gpcs::measures::{r2_gs, r2_gu};
use gpcs::simgen::{builtin_setting, population_rho2_gs, population_rho2_gu_mc, sample_mixture};
use proptest::prelude::*;

fn labeled_sample() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<usize>)> {
    (6usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), n),
            prop::collection::vec(1usize..=4, n),
        )
    })
}

fn points(pairs: &[(f64, f64)]) -> Vec<BivariatePoint> {
    pairs.iter().copied().map(BivariatePoint::from).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn specified_measure_in_unit_interval((pairs, labels) in labeled_sample()) {
        let s = BivariateSample::with_labels(points(&pairs), labels).unwrap();
        let v = r2_gs(&s).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn specified_measure_is_symmetric_in_x_and_y((pairs, labels) in labeled_sample()) {
        let s = BivariateSample::with_labels(points(&pairs), labels).unwrap();
        let a = r2_gs(&s).unwrap().value;
        let b = r2_gs(&s.swapped()).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn specified_measure_ignores_label_names(
        (pairs, labels) in labeled_sample(),
        perm in Just([1usize, 2, 3, 4]).prop_shuffle(),
    ) {
        let relabeled: Vec<usize> = labels.iter().map(|&l| 10 * perm[l - 1]).collect();
        let a = r2_gs(&BivariateSample::with_labels(points(&pairs), labels).unwrap()).unwrap().value;
        let b = r2_gs(&BivariateSample::with_labels(points(&pairs), relabeled).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn specified_measure_is_affine_invariant(
        (pairs, labels) in labeled_sample(),
        sx in prop_oneof![-5.0..-0.2f64, 0.2..5.0f64],
        sy in prop_oneof![-5.0..-0.2f64, 0.2..5.0f64],
        tx in -10.0..10.0f64,
        ty in -10.0..10.0f64,
    ) {
        let moved: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (sx * x + tx, sy * y + ty)).collect();
        let a = r2_gs(&BivariateSample::with_labels(points(&pairs), labels.clone()).unwrap()).unwrap().value;
        let b = r2_gs(&BivariateSample::with_labels(points(&moved), labels).unwrap()).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn plugin_intervals_nest_by_level((pairs, labels) in labeled_sample()) {
        let s = BivariateSample::with_labels(points(&pairs), labels).unwrap();
        let est = r2_gs(&s).unwrap();
        for variant in [VarianceVariant::GaussianClosedForm, VarianceVariant::GeneralMoments] {
            let narrow = plugin_ci(&est, s.len(), 0.80, variant).unwrap();
            let mid = plugin_ci(&est, s.len(), 0.95, variant).unwrap();
            let wide = plugin_ci(&est, s.len(), 0.99, variant).unwrap();
            prop_assert!(wide.lower <= mid.lower && mid.lower <= narrow.lower);
            prop_assert!(narrow.upper <= mid.upper && mid.upper <= wide.upper);
            prop_assert!(mid.contains(est.value));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unspecified_measure_in_unit_interval_and_symmetric(
        pairs in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 8..40),
        k in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let pts = points(&pairs);
        let config = KlinesConfig::default().with_seed(seed);
        let a = r2_gu(&pts, k, &config).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.value));
        let swapped: Vec<_> = pts.iter().map(|p| p.swapped()).collect();
        let b = r2_gu(&swapped, k, &config).unwrap();
        prop_assert!((a.fit.as_ref().unwrap().objective - b.fit.as_ref().unwrap().objective).abs() < 1e-9);
        prop_assert!((a.value - b.value).abs() < 1e-9);
    }

    #[test]
    fn unspecified_measure_survives_translation_and_uniform_scaling(
        pairs in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64), 8..40),
        scale in 0.1..10.0f64,
        tx in -100.0..100.0f64,
        ty in -100.0..100.0f64,
    ) {
        let pts = points(&pairs);
        let moved: Vec<_> = pts.iter().map(|p| BivariatePoint::new(scale * p.x + tx, scale * p.y + ty)).collect();
        let config = KlinesConfig::default();
        let a = r2_gu(&pts, 2, &config).unwrap();
        let b = r2_gu(&moved, 2, &config).unwrap();
        let wa = a.fit.as_ref().unwrap().objective;
        let wb = b.fit.as_ref().unwrap().objective;
        prop_assert!((wb - scale * scale * wa).abs() <= 1e-7 * wb.max(1.0));
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let spec = builtin_setting(3).unwrap();
    let sample = sample_mixture(&spec, 300, 4, false).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| r2_gu(sample.points(), 2, &KlinesConfig::default().with_seed(9)).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn unspecified_population_value_dominates_specified() {
    let config = KlinesConfig::default();
    for id in 1..=4 {
        let spec = builtin_setting(id).unwrap();
        let gu = population_rho2_gu_mc(&spec, 10_000, spec.k(), 31, &config).unwrap();
        let gs = population_rho2_gs(&spec);
        assert!(gu >= gs - 0.01, "setting {id}: {gu} < {gs}");
    }
}

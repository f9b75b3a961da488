use proptest::prelude::*;
use roadmetric::sampler::{
    derive_seed, read_sample, sample_process, sample_process_fastest_first, write_sample,
    WindowSpec,
};
use roadmetric::stats::{ks_one_sample, mean};

fn window() -> impl Strategy<Value = WindowSpec> {
    (2usize..4, 0.25f64..3.0, 0.5f64..3.0, 0.3f64..2.0)
        .prop_map(|(d, extra, r, v0)| WindowSpec::centered(d, d as f64 + extra, r, v0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_are_reproducible(seed in any::<u64>(), w in window()) {
        let a = sample_process(seed, &w).unwrap();
        let b = sample_process(seed, &w).unwrap();
        prop_assert_eq!(&a, &b);
        a.validate().unwrap();
        for r in &a.roads {
            prop_assert!(r.speed >= w.v0);
            prop_assert!(r.line.distance_to(&w.center) <= w.radius * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fastest_first_is_sorted(seed in any::<u64>(), w in window()) {
        let s = sample_process_fastest_first(seed, &w).unwrap();
        prop_assert!(s.roads.windows(2).all(|p| p[0].speed >= p[1].speed));
        prop_assert!(s.roads.iter().all(|r| r.speed >= w.v0));
    }

    #[test]
    fn text_round_trip_is_exact(seed in any::<u64>(), w in window()) {
        let s = sample_process(seed, &w).unwrap();
        let mut buf = Vec::new();
        write_sample(&s, &mut buf).unwrap();
        let back = read_sample(buf.as_slice()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn truncation_keeps_faster_roads(seed in any::<u64>(), cut in 0.5f64..4.0) {
        let w = WindowSpec::centered(2, 3.0, 2.0, 0.5).unwrap();
        let s = sample_process(seed, &w).unwrap();
        let kept = s.faster_than(cut);
        prop_assert!(kept.roads.iter().all(|r| r.speed > cut));
        prop_assert_eq!(kept.count(), s.roads.iter().filter(|r| r.speed > cut).count());
    }
}

#[test]
fn both_samplers_share_the_count_law() {
    let w = WindowSpec::centered(2, 3.0, 2.0, 1.0).unwrap();
    let plain: Vec<f64> = (0..4000)
        .map(|i| sample_process(derive_seed(5, i), &w).unwrap().count() as f64)
        .collect();
    let lazy: Vec<f64> = (0..4000)
        .map(|i| {
            sample_process_fastest_first(derive_seed(6, i), &w)
                .unwrap()
                .count() as f64
        })
        .collect();
    let sd = (2.0f64 / 4000.0).sqrt();
    assert!((mean(&plain) - 2.0).abs() < 4.0 * sd);
    assert!((mean(&lazy) - 2.0).abs() < 4.0 * sd);
}

#[test]
fn speeds_follow_the_pareto_tail_in_three_dimensions() {
    let w = WindowSpec::centered(3, 4.5, 5.0, 1.0).unwrap();
    let mut speeds = Vec::new();
    let mut i = 0;
    while speeds.len() < 5000 {
        speeds.extend(
            sample_process(derive_seed(8, i), &w)
                .unwrap()
                .roads
                .iter()
                .map(|r| r.speed),
        );
        i += 1;
    }
    let ks = ks_one_sample(&speeds, |v| 1.0 - v.powf(-3.5)).unwrap();
    assert!(ks.passes(0.001), "{ks:?}");
}

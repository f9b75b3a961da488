use proptest::prelude::*;
use roadmetric::geom::Vector;
use roadmetric::metric::{
    ball_volume, distance_field, kendall_recursive_upper, lower_certificate,
    lower_certificate_split, t_eps_upper, GridSpec, SolverConfig,
};
use roadmetric::sampler::{sample_process, ProcessSample, WindowSpec};

fn point() -> impl Strategy<Value = Vector> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Vector::new(&[a, b]))
}

fn sample(seed: u64, eps: f64) -> ProcessSample {
    sample_process(seed, &WindowSpec::centered(2, 3.0, 2.5, eps).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_times_form_a_metric(seed in 0u64..1000, x in point(), y in point(), z in point()) {
        let eps = 0.4;
        let s = sample(seed, eps);
        let cfg = SolverConfig::new(eps);
        let t = |a: &Vector, b: &Vector| t_eps_upper(&s, a, b, &cfg).unwrap().time;
        let (xy, yx, yz, xz) = (t(&x, &y), t(&y, &x), t(&y, &z), t(&x, &z));
        prop_assert!((xy - yx).abs() <= 1e-9 * xy.max(1e-300));
        prop_assert_eq!(t(&x, &x), 0.0);
        prop_assert!(xz <= xy + yz + 1e-9);
        prop_assert!(xy <= x.distance(&y) / eps + 1e-12);
    }

    #[test]
    fn certificates_bracket_the_solver(seed in 0u64..1000, x in point(), y in point()) {
        let eps = 0.4;
        let s = sample(seed, eps);
        let mut cfg = SolverConfig::new(eps);
        cfg.ingest_recursive_junctions = true;
        let up = t_eps_upper(&s, &x, &y, &cfg).unwrap();
        up.path.validate(&s, eps).unwrap();
        let dyadic = lower_certificate(&s, &x, &y, eps, 10).unwrap();
        let split = lower_certificate_split(&s, &x, &y, eps).unwrap();
        let k = kendall_recursive_upper(&s, &x, &y, cfg.kendall_alpha, cfg.kendall_depth, eps).unwrap();
        prop_assert!(dyadic <= split + 1e-12);
        prop_assert!(split <= up.time + 1e-9);
        prop_assert!(up.time <= k.time + 1e-9);
    }

    #[test]
    fn slower_hops_never_shorten_paths(seed in 0u64..1000, x in point(), y in point()) {
        let s = sample(seed, 0.2);
        let fast = t_eps_upper(&s, &x, &y, &SolverConfig::new(0.4)).unwrap().time;
        let slow = t_eps_upper(&s, &x, &y, &SolverConfig::new(0.2)).unwrap().time;
        prop_assert!(slow >= fast - 1e-10);
    }

    #[test]
    fn ball_volume_grows_with_radius(seed in 0u64..200) {
        let eps = 0.5;
        let s = sample(seed, eps);
        let grid = GridSpec::centered([0.0, 0.0], 1.0, 32).unwrap();
        let f = distance_field(&s, &Vector::zeros(2), &grid, &SolverConfig::new(eps)).unwrap();
        let mut last = 0.0;
        for k in 0..12 {
            let v = ball_volume(&f, 0.1 * k as f64).unwrap().volume;
            prop_assert!(v >= last);
            last = v;
        }
    }
}

#[test]
fn empty_sample_distances_are_straight_hops() {
    let w = WindowSpec::new(2, 3.0, Vector::new(&[0.5, 0.0]), 4.0, 0.5).unwrap();
    let s = ProcessSample::empty(w, 0);
    let (x, y) = (Vector::new(&[0.0, 0.0]), Vector::new(&[1.0, 0.0]));
    let cfg = SolverConfig::new(0.5);
    assert_eq!(t_eps_upper(&s, &x, &y, &cfg).unwrap().time, 2.0);
    assert_eq!(lower_certificate_split(&s, &x, &y, 0.5).unwrap(), 2.0);
    assert_eq!(
        kendall_recursive_upper(&s, &x, &y, 0.25, 12, 0.5)
            .unwrap()
            .time,
        2.0
    );
}

#[test]
fn empty_sample_balls_are_euclidean_discs() {
    let eps = 0.25;
    let s = ProcessSample::empty(WindowSpec::centered(2, 3.0, 3.0, eps).unwrap(), 0);
    let grid = GridSpec::centered([0.0, 0.0], 1.0, 400).unwrap();
    let f = distance_field(&s, &Vector::zeros(2), &grid, &SolverConfig::new(eps)).unwrap();
    for t in [1.0, 2.0, 3.0] {
        let b = ball_volume(&f, t).unwrap();
        let disc = std::f64::consts::PI * (eps * t).powi(2);
        assert!(!b.boundary_contaminated);
        assert!(
            (b.volume - disc).abs() < 0.01 * disc,
            "t = {t}: {} vs {disc}",
            b.volume
        );
    }
}

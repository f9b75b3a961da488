use proptest::prelude::*;
use rand::Rng;
use roadmetric::geom::{
    canonicalize_line, closest_pair, mu_ball_mass, point_line_distance, project_point,
    sample_line_hitting_ball, two_ball_hit_fraction, Ball, Vector,
};
use roadmetric::sampler::rng_from_seed;

fn coords(d: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, d)
}

fn nonzero(d: usize) -> impl Strategy<Value = Vec<f64>> {
    coords(d, 5.0).prop_filter("direction must be nonzero", |v| {
        v.iter().map(|x| x * x).sum::<f64>() > 1e-6
    })
}

fn point_and_direction() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..5).prop_flat_map(|d| (coords(d, 100.0), nonzero(d)))
}

proptest! {
    #[test]
    fn canonical_form_is_idempotent((p, u) in point_and_direction()) {
        let l = canonicalize_line(&Vector::new(&p), &Vector::new(&u)).unwrap();
        let again = canonicalize_line(l.anchor(), l.direction()).unwrap();
        prop_assert_eq!(again, l);
    }

    #[test]
    fn canonical_form_ignores_the_representative(
        (p, u) in point_and_direction(),
        shift in -50.0f64..50.0,
        stretch in 0.1f64..10.0,
        flip in any::<bool>(),
    ) {
        let (p, u) = (Vector::new(&p), Vector::new(&u));
        let a = canonicalize_line(&p, &u).unwrap();
        let sign = if flip { -stretch } else { stretch };
        let b = canonicalize_line(&p.offset(&u, shift), &(&u * sign)).unwrap();
        let scale = 1.0 + p.norm() + shift.abs() * u.norm();
        prop_assert!(a.anchor().distance(b.anchor()) <= 1e-12 * scale);
        prop_assert!(a.direction().distance(b.direction()) <= 1e-12);
    }

    #[test]
    fn canonical_invariants_hold((p, u) in point_and_direction()) {
        let point = Vector::new(&p);
        let l = canonicalize_line(&point, &Vector::new(&u)).unwrap();
        prop_assert!((l.direction().norm() - 1.0).abs() <= 1e-12);
        prop_assert!(l.anchor().dot(l.direction()).abs() <= 1e-12 * (1.0 + l.anchor().norm()));
        let lead = l.direction().coords().iter().find(|c| c.abs() > 1e-12).unwrap();
        prop_assert!(*lead > 0.0);
        prop_assert!(l.distance_to(&point) <= 1e-9 * (1.0 + point.norm()));
    }

    #[test]
    fn projection_is_orthogonal((p, u) in point_and_direction(), x in coords(4, 20.0)) {
        let l = canonicalize_line(&Vector::new(&p), &Vector::new(&u)).unwrap();
        let x = Vector::new(&x[..p.len()]);
        let q = project_point(&x, &l).unwrap();
        prop_assert!(l.distance_to(&q) <= 1e-9 * (1.0 + q.norm()));
        prop_assert!((&x - &q).dot(l.direction()).abs() <= 1e-9 * (1.0 + x.norm()));
        let dist = point_line_distance(&x, &l).unwrap();
        prop_assert!((dist - x.distance(&q)).abs() <= 1e-9 * (1.0 + x.norm()));
    }

    #[test]
    fn closest_pair_gap_is_minimal(
        (p1, u1) in point_and_direction(),
        q in coords(4, 20.0),
        w in nonzero(4),
        t in -5.0f64..5.0,
        s in -5.0f64..5.0,
    ) {
        let d = p1.len();
        let l1 = canonicalize_line(&Vector::new(&p1), &Vector::new(&u1)).unwrap();
        let Ok(l2) = canonicalize_line(&Vector::new(&q[..d]), &Vector::new(&w[..d])) else {
            return Ok(());
        };
        let cp = closest_pair(&l1, &l2, 1e-12).unwrap();
        let other = l1.point_at(t).distance(&l2.point_at(s));
        prop_assert!(cp.gap <= other + 1e-9 * (1.0 + other));
    }

    #[test]
    fn sampled_lines_hit_the_ball(seed in any::<u64>(), d in 2usize..5, r in 0.1f64..10.0) {
        let mut rng = rng_from_seed(seed);
        let ball = Ball::new(Vector::zeros(d), r).unwrap();
        for _ in 0..20 {
            let l = sample_line_hitting_ball(&mut rng, &ball).unwrap();
            prop_assert!(l.distance_to(&ball.center) <= r * (1.0 + 1e-12));
        }
    }
}

#[test]
fn signed_offset_is_uniform_in_the_plane() {
    let mut rng = rng_from_seed(3);
    let ball = Ball::new(Vector::zeros(2), 1.0).unwrap();
    let n = 100_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let l = sample_line_hitting_ball(&mut rng, &ball).unwrap();
        let a = l.anchor();
        let u = l.direction();
        let signed = a[1] * u[0] - a[0] * u[1];
        sum += signed;
        sq += signed * signed;
    }
    let mean = sum / n as f64;
    // Uniform on [-1, 1]: mean 0, second moment 1/3.
    let sd = (1.0f64 / 3.0 / n as f64).sqrt();
    assert!(mean.abs() <= 3.0 * sd, "{mean}");
    assert!((sq / n as f64 - 1.0 / 3.0).abs() < 0.01);
}

fn disc(x: f64, y: f64, r: f64) -> Ball {
    Ball::new(Vector::new(&[x, y]), r).unwrap()
}

#[test]
fn two_disc_measure_matches_crofton() {
    // (r, s, |x - y|, measure of the lines hitting both discs)
    let cases = [
        (0.1, 0.1, 10.0, 0.0012732819911471813),
        (1.0, 0.5, 3.0, 0.2175396248145987),
        (0.3, 0.7, 1.0, 0.31173643649643673),
        (0.5, 0.5, 1.0, 0.36338022763241873),
    ];
    let mut rng = rng_from_seed(21);
    for (r, s, gap, exact) in cases {
        let est = two_ball_hit_fraction(&disc(0.0, 0.0, r), &disc(gap, 0.0, s), 400_000, &mut rng)
            .unwrap();
        assert!(
            (est.value - exact).abs() <= 4.0 * est.stderr,
            "{r} {s} {gap}: {est:?} vs {exact}"
        );
    }
    let b = disc(1.0, 2.0, 0.7);
    let same = two_ball_hit_fraction(&b, &b, 1000, &mut rng).unwrap();
    assert_eq!((same.value, same.stderr), (mu_ball_mass(2, 0.7), 0.0));
}

#[test]
fn two_ball_measure_is_rigid_motion_invariant() {
    let mut rng = rng_from_seed(22);
    let n = 200_000;
    let base =
        two_ball_hit_fraction(&disc(0.0, 0.0, 0.4), &disc(2.0, 0.0, 0.3), n, &mut rng).unwrap();
    let (c, s) = (0.83f64.cos(), 0.83f64.sin());
    let moved = two_ball_hit_fraction(
        &disc(-3.0, 5.0, 0.4),
        &disc(-3.0 + 2.0 * c, 5.0 + 2.0 * s, 0.3),
        n,
        &mut rng,
    )
    .unwrap();
    assert!((base.value - moved.value).abs() <= 3.0 * base.stderr.hypot(moved.stderr));
}

#[test]
fn two_ball_measure_scales_with_codimension_power() {
    let mut rng = rng_from_seed(23);
    let n = 200_000;
    for d in [2usize, 3] {
        let at = |rho: f64, rng: &mut _| {
            let mut far = vec![0.0; d];
            far[0] = 2.0 * rho;
            let b1 = Ball::new(Vector::zeros(d), 0.5 * rho).unwrap();
            let b2 = Ball::new(Vector::new(&far), 0.4 * rho).unwrap();
            two_ball_hit_fraction(&b1, &b2, n, rng).unwrap()
        };
        let (a, b) = (at(1.0, &mut rng), at(3.0, &mut rng));
        let k = 3f64.powi(d as i32 - 1);
        assert!(
            (b.value - k * a.value).abs() <= 3.0 * b.stderr.hypot(k * a.stderr),
            "d = {d}"
        );
    }
}

#[test]
fn two_ball_ratio_is_bounded_on_random_configurations() {
    let mut rng = rng_from_seed(24);
    let mut ratios = Vec::new();
    for _ in 0..20 {
        let gap: f64 = rng.random_range(0.5..5.0);
        let r = gap * rng.random_range(0.05..1.0);
        let s = gap * rng.random_range(0.05..1.0);
        let est = two_ball_hit_fraction(&disc(0.0, 0.0, r), &disc(gap, 0.0, s), 20_000, &mut rng)
            .unwrap();
        ratios.push(est.value * gap / (r * s));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    println!("fitted ratio interval [{lo:.3}, {hi:.3}]");
    assert!(lo > 0.5 && hi < 4.0, "[{lo}, {hi}]");
}

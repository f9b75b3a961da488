use super::*;
use crate::geom::{Line, Vector};
use crate::sampler::{ProcessSample, Road, WindowSpec};

fn v(c: &[f64]) -> Vector {
    Vector::new(c)
}

fn sample_with(roads: &[(&[f64], &[f64], f64)]) -> ProcessSample {
    ProcessSample {
        window: WindowSpec::centered(2, 3.0, 10.0, 0.1).unwrap(),
        roads: roads
            .iter()
            .map(|&(p, d, speed)| Road {
                line: Line::through(&v(p), &v(d)).unwrap(),
                speed,
            })
            .collect(),
        seed: 0,
    }
}

fn points(mut f: impl FnMut(f64) -> f64) -> Vec<CurvePoint> {
    (0..12)
        .map(|k| {
            let t = 0.1 * 1.3f64.powi(k);
            CurvePoint {
                t,
                value: f(t),
                stderr: 0.0,
                n: 1,
            }
        })
        .collect()
}

#[test]
fn planar_exponents() {
    let e = exponents(2, 3.0).unwrap();
    assert_eq!(
        (e.sigma, e.s_star, e.s_lower, e.scale_exp),
        (6.0, 4.0, 3.0, 0.5)
    );
}

#[test]
fn spatial_exponents() {
    let e = exponents(3, 4.0).unwrap();
    assert_eq!((e.sigma, e.s_star, e.s_lower), (15.0, 9.0, 7.0));
    assert!((e.scale_exp - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn exponent_identities_hold_across_parameters() {
    for d in 2..5 {
        for k in 1..20 {
            let gamma = d as f64 + 0.25 * k as f64;
            let e = exponents(d, gamma).unwrap();
            let df = d as f64;
            assert!((e.s_star - e.s_lower - (df - 1.0) / (gamma - df)).abs() < 1e-12);
            assert!(
                (e.sigma - e.s_star - (gamma - 1.0) * (gamma - 2.0) / (gamma - df)).abs() < 1e-9
            );
            assert!(e.s_star > df);
        }
    }
}

#[test]
fn exponents_reject_light_tails() {
    assert!(exponents(2, 2.0).is_err());
    assert!(exponents(1, 3.0).is_err());
    assert!(exponents(2, f64::INFINITY).is_err());
}

#[test]
fn fit_recovers_power_laws() {
    let f = fit_exponent(&points(|t| t.powi(3)), (0.0, 100.0)).unwrap();
    assert!((f.slope - 3.0).abs() < 1e-12);
    assert_eq!(f.n_points, 12);
    let f = fit_exponent(&points(|_| 5.0), (0.0, 100.0)).unwrap();
    assert!(f.slope.abs() < 1e-12);
    assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
}

#[test]
fn fit_tolerates_small_noise() {
    let mut k = 0u32;
    let noisy = points(|t| {
        k += 1;
        let noise = (k.wrapping_mul(2654435761) % 1000) as f64 / 500.0 - 1.0;
        t.powi(4) * (1.0 + 0.01 * noise)
    });
    let f = fit_exponent(&noisy, (0.0, 100.0)).unwrap();
    assert!((f.slope - 4.0).abs() < 0.1);
}

#[test]
fn fit_uses_only_the_window() {
    let pts = points(|t| if t < 0.5 { t * t } else { t });
    let f = fit_exponent(&pts, (0.0, 0.45)).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12);
}

#[test]
fn fit_needs_three_points() {
    let pts = points(|t| t);
    assert!(fit_exponent(&pts[..2], (0.0, 100.0)).is_err());
    assert!(fit_exponent(&points(|_| 0.0), (0.0, 100.0)).is_err());
    assert!(fit_exponent(&pts, (1.0, 0.5)).is_err());
}

#[test]
fn multiscale_bound_regression() {
    let r = [1.0, 0.5, 0.25];
    let b = multiscale_bound(&r, &r, 0, 2, 2, 3.0).unwrap();
    assert!((b - 40688.69785475098).abs() < 1e-9 * b);
}

#[test]
fn multiscale_bound_single_scale() {
    let (r, vs) = ([2.0, 1.0, 0.5], [4.0, 2.0, 1.5]);
    let b = multiscale_bound(&r, &vs, 2, 2, 2, 3.0).unwrap();
    assert!((b - 0.5 / 2.25).abs() < 1e-15);
}

#[test]
fn multiscale_bound_decreases_in_first_speed() {
    let r = [1.0, 0.5, 0.25, 0.125];
    let mut last = f64::INFINITY;
    for k in 0..8 {
        let v0 = 1.0 + 0.5 * k as f64;
        let b = multiscale_bound(&r, &[v0, 0.9, 0.8, 0.7], 0, 3, 2, 3.0).unwrap();
        assert!(b <= last);
        last = b;
    }
}

#[test]
fn multiscale_bound_rejects_bad_input() {
    assert!(multiscale_bound(&[1.0, 2.0], &[1.0, 0.5], 0, 1, 2, 3.0).is_err());
    assert!(multiscale_bound(&[1.0, 0.5], &[1.0], 0, 0, 2, 3.0).is_err());
    assert!(multiscale_bound(&[1.0, 0.5], &[1.0, 0.5], 1, 0, 2, 3.0).is_err());
    assert!(multiscale_bound(&[1.0, 0.5], &[1.0, 0.5], 0, 2, 2, 3.0).is_err());
}

#[test]
fn multiscale_check_matches_single_scale_law() {
    let w = WindowSpec::centered(2, 3.0, 1.0, 0.5).unwrap();
    let rep = multiscale_mc_check(&v(&[0.0, 0.0]), &[1.0], &[0.5], 0, 0, &w, 4000, 11).unwrap();
    let exact = -(-4.0f64).exp_m1();
    assert!((rep.estimate - exact).abs() <= 3.0 * rep.stderr + 1e-3);
    assert!(rep.passes());
}

#[test]
fn multiscale_check_rejects_small_window() {
    let w = WindowSpec::centered(2, 3.0, 0.5, 0.5).unwrap();
    assert!(multiscale_mc_check(&v(&[0.0, 0.0]), &[1.0], &[0.5], 0, 0, &w, 10, 1).is_err());
    let w = WindowSpec::centered(2, 3.0, 2.0, 1.0).unwrap();
    assert!(multiscale_mc_check(&v(&[0.0, 0.0]), &[1.0], &[0.5], 0, 0, &w, 10, 1).is_err());
}

#[test]
fn speed_on_single_road() {
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 4.0)]);
    let q = recover_speed(&s, &v(&[0.3, 0.0]), &[0.1, 0.01], 0.1).unwrap();
    assert!((q - 0.25).abs() < 1e-6);
}

#[test]
fn speed_at_crossing_takes_fastest() {
    let s = sample_with(&[
        (&[0.0, 0.0], &[1.0, 0.0], 3.0),
        (&[0.0, 0.0], &[1.0, 1.0], 5.0),
    ]);
    let q = recover_speed(&s, &v(&[0.0, 0.0]), &[0.05, 0.01], 0.1).unwrap();
    assert!((q - 0.2).abs() < 1e-6);
}

#[test]
fn speed_needs_a_road() {
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 3.0)]);
    assert!(recover_speed(&s, &v(&[0.0, 0.5]), &[0.1], 0.1).is_err());
    assert!(recover_speed(&s, &v(&[0.0, 0.0]), &[], 0.1).is_err());
}

#[test]
fn off_road_quotient_is_slower() {
    let s = sample_with(&[(&[0.0, 0.0], &[1.0, 0.0], 4.0)]);
    let x = v(&[0.0, 0.0]);
    let cfg = crate::metric::SolverConfig::new(0.1);
    let h = 0.1;
    let off = crate::metric::t_eps_upper(&s, &x, &v(&[0.0, h]), &cfg)
        .unwrap()
        .time
        / h;
    let on = recover_speed(&s, &x, &[h], 0.1).unwrap();
    assert!(off >= on);
}

#[test]
fn ratio_halves_when_speed_doubles() {
    let sample = |speed: f64| SampleVolumes {
        index: 0,
        point: v(&[0.0, 0.0]),
        speed,
        volumes: vec![Some(2.0)],
    };
    let curve = |speed: f64| VolumeCurve {
        mode: PointMode::OnRoad,
        points: vec![CurvePoint {
            t: 0.5,
            value: 2.0,
            stderr: 0.0,
            n: 1,
        }],
        contaminated: vec![0],
        dropped: 0,
        skipped: 0,
        crossover: 0.0,
        samples: vec![sample(speed)],
    };
    let a = theta_ratio(&curve(2.0), 3.0).unwrap();
    let b = theta_ratio(&curve(4.0), 3.0).unwrap();
    assert!((a[0].mean - 2.0 * b[0].mean).abs() < 1e-15);
    assert!(a[0].mean > 0.0);
    let mut typical = curve(2.0);
    typical.mode = PointMode::Typical;
    assert!(theta_ratio(&typical, 3.0).is_err());
}

#[test]
fn epsilon_rules() {
    assert_eq!(EpsilonRule::default().epsilon(1.0), 0.02);
    assert_eq!(EpsilonRule::Fixed(0.3).epsilon(7.0), 0.3);
    assert!(EpsilonRule::Proportional(0.0).validate().is_err());
    assert!(EpsilonRule::Fixed(f64::NAN).validate().is_err());
}

#[test]
fn content_hash_matches_git() {
    // `printf 'hello\n' | git hash-object --stdin`
    assert_eq!(
        content_hash("hello\n"),
        "ce013625030ba8dba906f756967f9e9ca394464a"
    );
}

#[test]
fn run_tasks_keeps_order() {
    let out = run_tasks(100, |i| i * i);
    assert!(out.iter().enumerate().all(|(i, &x)| x == i * i));
}

//! Verification battery: the invariant checks behind `verify` and the
//! acceptance criteria, each with a runtime budget.
//!
//! The quick tier runs the invariant checks on reduced workloads; the full
//! tier runs every criterion at its stated size.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roadmetric::estimators::{
    covering_counts, fit_covering, fit_exponent, multiscale_mc_check, on_road_point, qcp_curve,
    recover_speed, scaling_ks, volume_curves, CurvePoint, EpsilonRule, QcpConfig, ScalingConfig,
    VolumeConfig,
};
use roadmetric::geom::{canonicalize_line, random_unit_vector, Line, Vector};
use roadmetric::metric::{
    grid_oracle, kendall_recursive_upper, lower_certificate_split, t_eps_upper, FieldEngine,
    GridSpec, SolverConfig,
};
use roadmetric::sampler::{
    derive_seed, fastest_in_ball, sample_process, FastestFirst, ProcessSample, Road, WindowSpec,
};
use roadmetric::stats::{ks_one_sample, mean, variance};
use roadmetric::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    Quick,
    Full,
}

/// Verdict of one check with a one-line summary of the evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome { passed, detail }
    }
}

pub struct Check {
    /// `G` for geometry, otherwise the acceptance criterion number.
    pub id: &'static str,
    pub name: &'static str,
    pub limit: Duration,
    /// Part of the quick tier.
    pub quick: bool,
    run: fn(Tier) -> Result<Outcome>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {:<26} {:>8.1}s (limit {:>5}s)  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub fn checks() -> Vec<Check> {
    let c = |id, name, limit, quick, run| Check {
        id,
        name,
        limit,
        quick,
        run,
    };
    vec![
        c(
            "G",
            "line canonicalization",
            secs(10),
            true,
            geom_canonical as fn(Tier) -> Result<Outcome>,
        ),
        c("1", "road-count law", secs(10), true, road_count),
        c("2", "speed-mark law", secs(10), true, speed_marks),
        c("3", "fastest-road law", secs(60), true, fastest_law),
        c("4", "metric axioms", secs(300), true, metric_axioms),
        c("5", "sandwich", secs(600), true, sandwich),
        c(
            "6",
            "oracle equivalence",
            secs(120),
            true,
            oracle_equivalence,
        ),
        c(
            "7",
            "epsilon monotonicity",
            secs(300),
            true,
            epsilon_monotone,
        ),
        c("8", "truncation exactness", secs(300), true, truncation),
        c("9", "scaling law", secs(1800), false, scaling),
        c("10", "multiscale bound", secs(1800), true, multiscale),
        c(
            "11",
            "ball-volume ordering",
            secs(7200),
            false,
            volume_ordering,
        ),
        c(
            "12",
            "quick-connection slope",
            secs(7200),
            false,
            quick_connection,
        ),
        c(
            "13",
            "box-dimension surrogate",
            secs(3600),
            false,
            box_dimension,
        ),
        c("14", "speed recovery", secs(300), true, speed_recovery),
    ]
}

/// Runs the checks of `tier` (all of them at the full tier), optionally only
/// those whose id is in `only`, reporting each result as it completes. At
/// the full tier a check also fails when it overruns its budget.
pub fn run(
    tier: Tier,
    only: Option<&[String]>,
    mut report: impl FnMut(&CheckResult),
) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for check in checks() {
        if tier == Tier::Quick && !check.quick {
            continue;
        }
        if only.is_some_and(|ids| !ids.iter().any(|i| i == check.id)) {
            continue;
        }
        let start = Instant::now();
        let outcome =
            (check.run)(tier).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let elapsed = start.elapsed();
        let mut passed = outcome.passed;
        let mut detail = outcome.detail;
        if tier == Tier::Full && elapsed > check.limit {
            passed = false;
            detail.push_str("; over budget");
        }
        let r = CheckResult {
            id: check.id,
            name: check.name,
            passed,
            detail,
            elapsed,
            limit: check.limit,
        };
        report(&r);
        out.push(r);
    }
    out
}

fn pick(tier: Tier, quick: usize, full: usize) -> usize {
    match tier {
        Tier::Quick => quick,
        Tier::Full => full,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn v(c: &[f64]) -> Vector {
    Vector::new(c)
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> Vector {
    let u = random_unit_vector(rng, 2);
    &u * (radius * rng.random::<f64>().sqrt())
}

fn road(p: &[f64], d: &[f64], speed: f64) -> Result<Road> {
    Ok(Road {
        line: Line::through(&v(p), &v(d))?,
        speed,
    })
}

fn handmade(roads: Vec<Road>, radius: f64, v0: f64) -> Result<ProcessSample> {
    Ok(ProcessSample {
        window: WindowSpec::centered(2, 3.0, radius, v0)?,
        roads,
        seed: 0,
    })
}

fn geom_canonical(_: Tier) -> Result<Outcome> {
    let mut rng = rng(7);
    let mut worst = 0.0f64;
    let mut idempotent = true;
    let n = 2000;
    for k in 0..n {
        let d = 2 + k % 3;
        let p = &random_unit_vector(&mut rng, d) * (10.0 * rng.random::<f64>());
        let dir = &random_unit_vector(&mut rng, d) * (0.1 + 5.0 * rng.random::<f64>());
        let a = canonicalize_line(&p, &dir)?;
        let shift = 20.0 * rng.random::<f64>() - 10.0;
        let b = canonicalize_line(
            &p.offset(&dir, shift),
            &(&dir * -(0.5 + rng.random::<f64>())),
        )?;
        worst = worst
            .max(a.anchor().distance(b.anchor()))
            .max(a.direction().distance(b.direction()));
        idempotent &= canonicalize_line(a.anchor(), a.direction())? == a;
    }
    Ok(Outcome::new(
        worst <= 1e-9 && idempotent,
        format!("{n} lines, max representation gap {worst:.1e}, idempotent {idempotent}"),
    ))
}

fn road_count(_: Tier) -> Result<Outcome> {
    let w = WindowSpec::centered(2, 3.0, 1.0, 1.0)?;
    let counts: Vec<f64> = (0..10_000)
        .map(|i| sample_process(derive_seed(1, i), &w).map(|s| s.count() as f64))
        .collect::<Result<_>>()?;
    let (m, var) = (mean(&counts), variance(&counts));
    Ok(Outcome::new(
        (0.97..=1.03).contains(&m) && (0.9..=1.1).contains(&var),
        format!("mean {m:.4}, variance {var:.4} over 10^4 samples"),
    ))
}

fn speed_marks(_: Tier) -> Result<Outcome> {
    let w = WindowSpec::centered(2, 3.0, 50.0, 1.0)?;
    let (mut passes, mut all) = (0, Vec::new());
    let mut i = 0u64;
    for _ in 0..10 {
        let mut batch = Vec::with_capacity(5000);
        while batch.len() < 5000 {
            let s = sample_process(derive_seed(2, i), &w)?;
            i += 1;
            batch.extend(s.roads.iter().map(|r| r.speed));
        }
        batch.truncate(5000);
        let ks = ks_one_sample(&batch, |x| 1.0 - x.powi(-2))?;
        passes += ks.passes(0.01) as usize;
        all.extend(batch);
    }
    let m = mean(&all);
    Ok(Outcome::new(
        passes >= 8 && (1.8..=2.2).contains(&m),
        format!("KS passes {passes}/10, mean speed {m:.4}"),
    ))
}

fn fastest_law(tier: Tier) -> Result<Outcome> {
    let w = WindowSpec::centered(2, 3.0, 1.0, 0.01)?;
    let n = pick(tier, 1000, 5000);
    let mut passes = 0;
    for b in 0..10u64 {
        let speeds: Vec<f64> = (0..n as u64)
            .map(|i| {
                FastestFirst::new(derive_seed(3 + 100 * b, i), &w)
                    .map(|mut s| s.next().map_or(0.0, |r| r.speed))
            })
            .collect::<Result<_>>()?;
        let ks = ks_one_sample(&speeds, |v| (-v.powi(-2)).exp())?;
        passes += ks.passes(0.01) as usize;
    }
    // The fastest-first stream and the plain sampler must agree on the law.
    let m = pick(tier, 100, 400) as u64;
    let plain: Vec<f64> = (0..m)
        .map(|i| {
            let s = sample_process(derive_seed(4, i), &w)?;
            Ok(fastest_in_ball(&s, &Vector::zeros(2), 1.0)?.speed)
        })
        .collect::<Result<_>>()?;
    let ks = ks_one_sample(&plain, |v| (-v.powi(-2)).exp())?;
    Ok(Outcome::new(
        passes >= 8 && ks.passes(0.01),
        format!(
            "KS passes {passes}/10 on {n} fastest-first draws, full sampler p = {:.3} on {m}",
            ks.p_value
        ),
    ))
}

fn metric_axioms(tier: Tier) -> Result<Outcome> {
    let eps = 0.3;
    let w = WindowSpec::centered(2, 3.0, 3.0, eps)?;
    let cfg = SolverConfig::new(eps);
    let (n_samples, n_triples) = (pick(tier, 3, 10), pick(tier, 30, 100));
    let mut violations = 0;
    let mut rng = rng(4);
    for s in 0..n_samples {
        let sample = sample_process(derive_seed(40, s as u64), &w)?;
        for _ in 0..n_triples {
            let p: Vec<Vector> = (0..3).map(|_| uniform_in_disc(&mut rng, 1.5)).collect();
            let t = |a: &Vector, b: &Vector| t_eps_upper(&sample, a, b, &cfg).map(|u| u.time);
            let (xy, yx) = (t(&p[0], &p[1])?, t(&p[1], &p[0])?);
            let (yz, xz) = (t(&p[1], &p[2])?, t(&p[0], &p[2])?);
            let xx = t(&p[0], &p[0])?;
            violations += ((xy - yx).abs() > 1e-9 * xy) as usize;
            violations += (xx != 0.0) as usize;
            for (a, b, c) in [(xz, xy, yz), (xy, xz, yz), (yz, xy, xz)] {
                violations += (a > b + c + 1e-9) as usize;
            }
        }
    }
    Ok(Outcome::new(
        violations == 0,
        format!("{violations} violations on {n_samples} samples x {n_triples} triples"),
    ))
}

fn sandwich(tier: Tier) -> Result<Outcome> {
    let eps = 0.3;
    let w = WindowSpec::centered(2, 3.0, 3.0, eps)?;
    let mut cfg = SolverConfig::new(eps);
    cfg.ingest_recursive_junctions = true;
    let (n_samples, n_pairs) = (pick(tier, 3, 10), pick(tier, 30, 100));
    let (mut violations, mut ratio) = (0, Vec::new());
    let mut rng = rng(5);
    for s in 0..n_samples {
        let sample = sample_process(derive_seed(50, s as u64), &w)?;
        for _ in 0..n_pairs {
            let (x, y) = (
                uniform_in_disc(&mut rng, 1.5),
                uniform_in_disc(&mut rng, 1.5),
            );
            let lo = lower_certificate_split(&sample, &x, &y, eps)?;
            let mid = t_eps_upper(&sample, &x, &y, &cfg)?.time;
            let hi = kendall_recursive_upper(
                &sample,
                &x,
                &y,
                cfg.kendall_alpha,
                cfg.kendall_depth,
                eps,
            )?
            .time;
            violations += (lo > mid + 1e-9) as usize + (mid > hi + 1e-9) as usize;
            if mid > 0.0 {
                ratio.push(lo / mid);
            }
        }
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{violations} violations on {n_samples} samples x {n_pairs} pairs, mean lower/upper {:.3}",
            mean(&ratio)
        ),
    ))
}

fn oracle_cases() -> Result<Vec<(ProcessSample, Vector, Vector, f64)>> {
    let (o, e) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
    let s = |roads: Vec<Road>, v0: f64| handmade(roads, 3.0, v0);
    Ok(vec![
        (
            s(vec![road(&[0.0, 0.1], &[1.0, 0.0], 10.0)?], 1.0)?,
            o.clone(),
            e.clone(),
            1.0,
        ),
        (
            s(vec![road(&[0.0, 0.3], &[1.0, 0.2], 4.0)?], 0.5)?,
            o.clone(),
            e.clone(),
            0.5,
        ),
        (
            s(vec![road(&[0.5, 0.0], &[0.0, 1.0], 6.0)?], 1.0)?,
            o.clone(),
            v(&[1.0, 1.0]),
            1.0,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.2], &[1.0, 0.0], 5.0)?,
                    road(&[0.0, -0.2], &[1.0, 0.0], 3.0)?,
                ],
                1.0,
            )?,
            o.clone(),
            v(&[2.0, 0.0]),
            1.0,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.0], &[1.0, 1.0], 4.0)?,
                    road(&[1.0, 0.0], &[-1.0, 1.0], 4.0)?,
                ],
                0.5,
            )?,
            v(&[0.0, 0.3]),
            v(&[1.0, 0.3]),
            0.5,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.5], &[1.0, 0.0], 8.0)?,
                    road(&[0.2, 0.0], &[0.0, 1.0], 2.0)?,
                ],
                0.5,
            )?,
            o.clone(),
            v(&[1.5, 0.5]),
            0.5,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.4], &[1.0, 0.1], 3.0)?,
                    road(&[0.0, -0.4], &[1.0, -0.1], 3.0)?,
                ],
                1.0,
            )?,
            o.clone(),
            v(&[2.0, 0.0]),
            1.0,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.3], &[1.0, 0.0], 6.0)?,
                    road(&[0.0, 0.0], &[0.0, 1.0], 2.0)?,
                    road(&[1.0, 0.0], &[0.0, 1.0], 2.0)?,
                ],
                0.5,
            )?,
            o.clone(),
            e.clone(),
            0.5,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.0], &[1.0, 2.0], 5.0)?,
                    road(&[0.0, 1.0], &[1.0, 0.0], 5.0)?,
                    road(&[1.5, 0.0], &[-1.0, 2.0], 5.0)?,
                ],
                0.5,
            )?,
            v(&[-0.2, 0.0]),
            v(&[1.7, 0.0]),
            0.5,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.1], &[1.0, 0.05], 2.0)?,
                    road(&[0.0, -0.15], &[1.0, -0.05], 3.0)?,
                    road(&[0.6, 0.0], &[0.3, 1.0], 7.0)?,
                ],
                1.0,
            )?,
            o.clone(),
            v(&[1.2, 0.4]),
            1.0,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.05], &[1.0, 0.0], 1.5)?,
                    road(&[0.0, 0.6], &[1.0, 0.0], 20.0)?,
                ],
                1.0,
            )?,
            o.clone(),
            v(&[1.5, 0.0]),
            1.0,
        ),
        (
            s(
                vec![
                    road(&[0.0, 0.2], &[1.0, 0.3], 4.0)?,
                    road(&[0.0, -0.3], &[1.0, 0.4], 2.5)?,
                    road(&[1.0, 0.0], &[1.0, -1.0], 6.0)?,
                ],
                0.5,
            )?,
            v(&[0.0, 0.0]),
            v(&[1.8, -0.2]),
            0.5,
        ),
    ])
}

fn oracle_equivalence(_: Tier) -> Result<Outcome> {
    let cases = oracle_cases()?;
    let mut worst = 0.0f64;
    for (sample, x, y, eps) in &cases {
        let up = t_eps_upper(sample, x, y, &SolverConfig::new(*eps))?.time;
        let oracle = grid_oracle(sample, x, y, *eps, 3)?;
        worst = worst.max((up - oracle).abs() / oracle);
    }
    Ok(Outcome::new(
        worst <= 1e-3,
        format!(
            "{} configurations, max relative gap {worst:.2e}",
            cases.len()
        ),
    ))
}

fn epsilon_monotone(tier: Tier) -> Result<Outcome> {
    let epsilons = [0.2, 0.1, 0.05];
    let w = WindowSpec::centered(2, 3.0, 1.5, 0.05)?;
    let n_pairs = pick(tier, 15, 50);
    let mut rng = rng(7);
    let mut violations = 0;
    for k in 0..n_pairs {
        let sample = sample_process(derive_seed(70, (k / 10) as u64), &w)?;
        let (x, y) = (
            uniform_in_disc(&mut rng, 1.0),
            uniform_in_disc(&mut rng, 1.0),
        );
        let mut last = 0.0f64;
        for &eps in &epsilons {
            let cfg = SolverConfig::new(eps);
            let t = t_eps_upper(&sample, &x, &y, &cfg)?.time;
            violations += (t < last - cfg.refine_tol) as usize;
            last = t;
        }
    }
    Ok(Outcome::new(
        violations == 0,
        format!("{violations} violations on {n_pairs} pairs, epsilon {epsilons:?}"),
    ))
}

fn truncation(tier: Tier) -> Result<Outcome> {
    let eps = 0.2;
    let w = WindowSpec::centered(2, 3.0, 2.0, 0.1)?;
    let cfg = SolverConfig::new(eps);
    let n_pairs = pick(tier, 15, 50);
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    for k in 0..n_pairs {
        let full = sample_process(derive_seed(80, (k / 10) as u64), &w)?;
        let kept = full.faster_than(eps);
        let (x, y) = (
            uniform_in_disc(&mut rng, 1.2),
            uniform_in_disc(&mut rng, 1.2),
        );
        let a = t_eps_upper(&full, &x, &y, &cfg)?.time;
        let b = t_eps_upper(&kept, &x, &y, &cfg)?.time;
        worst = worst.max((a - b).abs());
    }
    Ok(Outcome::new(
        worst <= cfg.refine_tol,
        format!(
            "{n_pairs} pairs, max change {worst:.1e} (tolerance {:.0e})",
            cfg.refine_tol
        ),
    ))
}

fn scaling(tier: Tier) -> Result<Outcome> {
    let n = pick(tier, 200, 1000);
    let (mut pass, mut control_fail) = (0, 0);
    let mut ps = Vec::new();
    for b in 0..10u64 {
        let out = scaling_ks(&ScalingConfig::new(2, 3.0, 0.25, n, 900 + b))?;
        pass += out.ks.passes(0.01) as usize;
        control_fail += (!out.control.passes(0.01)) as usize;
        ps.push(format!("{:.2}", out.ks.p_value));
    }
    Ok(Outcome::new(
        pass >= 7 && control_fail >= 8,
        format!(
            "KS passes {pass}/10 (p = {}), wrong exponent rejected {control_fail}/10",
            ps.join(" ")
        ),
    ))
}

fn multiscale(tier: Tier) -> Result<Outcome> {
    let n_samples = pick(tier, 10_000, 100_000);
    let mut rng = rng(10);
    let (mut upper_bad, mut lower_bad) = (0, 0);
    let mut worst = f64::NEG_INFINITY;
    for c in 0..10u64 {
        let len = 2 + (c as usize % 3);
        let mut r_seq = vec![1.0];
        let mut v_seq = vec![1.0 + 2.0 * rng.random::<f64>()];
        for _ in 1..len {
            r_seq.push(r_seq.last().unwrap() * (0.3 + 0.5 * rng.random::<f64>()));
            v_seq.push(v_seq.last().unwrap() * (0.4 + 0.5 * rng.random::<f64>()));
        }
        let k = len - 1;
        let n = (c as usize / 3) % len;
        let vmin = v_seq[n..=k].iter().copied().fold(f64::INFINITY, f64::min);
        let window = WindowSpec::centered(2, 3.0, r_seq[0], vmin)?;
        let rep = multiscale_mc_check(
            &Vector::zeros(2),
            &r_seq,
            &v_seq,
            n,
            k,
            &window,
            n_samples,
            1000 + c,
        )?;
        upper_bad += !rep.upper_ok as usize;
        lower_bad += !rep.lower_ok as usize;
        worst = worst.max((rep.estimate - rep.upper_bound) / rep.stderr.max(1e-300));
    }
    Ok(Outcome::new(
        upper_bad == 0 && lower_bad == 0,
        format!(
            "10 configurations x {n_samples} samples, upper violations {upper_bad}, lower violations {lower_bad}, \
             max (estimate - bound)/stderr {worst:.1}"
        ),
    ))
}

fn volume_ordering(tier: Tier) -> Result<Outcome> {
    let t_list: Vec<f64> = (0..=16).map(|j| 2f64.powf(j as f64 / 8.0)).collect();
    let window = (2.0, 4.0);
    let per = pick(tier, 2, 8);
    let mut ordered = 0;
    let mut slopes = Vec::new();
    let (mut pooled_typ, mut pooled_road) = (vec![0.0; t_list.len()], vec![0.0; t_list.len()]);
    for e in 0..10u64 {
        let mut cfg = VolumeConfig::new(3.0, t_list.clone(), per, 0.1, 1100 + e);
        cfg.window_radius = 12.0;
        cfg.grid_half_width = 9.0;
        cfg.grid_n = 300;
        cfg.solver.hop_neighbors = 4;
        cfg.solver.candidate_depth = 0;
        let (typ, on_road) = volume_curves(&cfg)?;
        let a = fit_exponent(&typ.points, window)?.slope;
        let b = fit_exponent(&on_road.points, window)?.slope;
        ordered += (b < a) as usize;
        slopes.push(format!("{a:.2}/{b:.2}"));
        for (k, (p, q)) in typ.points.iter().zip(&on_road.points).enumerate() {
            pooled_typ[k] += p.value;
            pooled_road[k] += q.value;
        }
    }
    let pooled = |vals: &[f64]| -> Vec<CurvePoint> {
        t_list
            .iter()
            .zip(vals)
            .map(|(&t, &value)| CurvePoint {
                t,
                value,
                stderr: 0.0,
                n: 10,
            })
            .collect()
    };
    let a = fit_exponent(&pooled(&pooled_typ), window)?.slope;
    let b = fit_exponent(&pooled(&pooled_road), window)?.slope;
    Ok(Outcome::new(
        ordered >= 9 && (3.0..=5.0).contains(&a) && (2.2..=3.8).contains(&b),
        format!(
            "on-road below typical in {ordered}/10, pooled slopes typical {a:.3} on-road {b:.3} over t in [2, 4]; \
             per ensemble {}",
            slopes.join(" ")
        ),
    ))
}

fn quick_connection(tier: Tier) -> Result<Outcome> {
    let t_list: Vec<f64> = (0..=12)
        .rev()
        .map(|k| 2f64.powf(-(k as f64) / 4.0))
        .collect();
    let n = pick(tier, 20_000, QCP_SAMPLES);
    let mut cfg = QcpConfig::new(2, 3.0, t_list, n, 12);
    cfg.epsilon_rule = EpsilonRule::Proportional(QCP_EPSILON_RATIO);
    let points = qcp_curve(&cfg)?;
    let upper: Vec<CurvePoint> = points.iter().map(|p| p.upper).collect();
    let fit = fit_exponent(&upper, (0.125, 1.0))?;
    let monotone = upper
        .windows(2)
        .all(|w| w[0].value <= w[1].value + 3.0 * w[0].stderr.hypot(w[1].stderr));
    Ok(Outcome::new(
        (4.0..=8.0).contains(&fit.slope) && monotone,
        format!(
            "slope {:.3} (r2 {:.3}, {} nonzero points), monotone {monotone}, n = {n} per t",
            fit.slope, fit.r_squared, fit.n_points
        ),
    ))
}

/// Samples per abscissa in the quick-connection criterion.
const QCP_SAMPLES: usize = 1_000_000;
/// `ε = t / QCP_EPSILON_RATIO` in the quick-connection criterion.
const QCP_EPSILON_RATIO: f64 = 2.0;

fn covering_slope(
    sample: &ProcessSample,
    cfg: &SolverConfig,
    grid: &GridSpec,
    scales: &[f64],
) -> Result<f64> {
    let engine = FieldEngine::new(sample, cfg)?;
    let field = engine.field(&Vector::zeros(2), grid)?;
    Ok(fit_covering(&covering_counts(&engine, &field, scales)?)?.slope)
}

fn box_dimension(tier: Tier) -> Result<Outcome> {
    let eps = 0.1;
    let mut cfg = SolverConfig::new(eps);
    cfg.hop_neighbors = 4;
    cfg.candidate_depth = 0;
    let step = 2f64.powf(1.0 / 8.0);
    let scales = |hi: f64| -> Vec<f64> { (0..9).map(|j| hi * step.powi(-j)).collect() };
    let window = WindowSpec::centered(2, 3.0, DIM_WINDOW, eps)?;
    let control_grid = GridSpec::centered([0.0, 0.0], 8.0, 800)?;
    let control = covering_slope(
        &ProcessSample::empty(window.clone(), 0),
        &cfg,
        &control_grid,
        &scales(8.0),
    )?;
    let grid = GridSpec::centered([0.0, 0.0], DIM_HALF_WIDTH, DIM_GRID)?;
    let n = pick(tier, 1, DIM_SAMPLES);
    let mut slopes = Vec::new();
    for i in 0..n {
        let sample = sample_process(derive_seed(13, i as u64), &window)?;
        slopes.push(covering_slope(&sample, &cfg, &grid, &scales(DIM_T_MAX))?);
    }
    let above = slopes.iter().filter(|&&s| s > 2.5).count();
    Ok(Outcome::new(
        (control - 2.0).abs() <= 0.1 && above == n,
        format!(
            "empty control {control:.3}, random samples {}",
            slopes
                .iter()
                .map(|s| format!("{s:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    ))
}

const DIM_WINDOW: f64 = 12.0;
const DIM_HALF_WIDTH: f64 = 8.0;
const DIM_GRID: usize = 200;
const DIM_T_MAX: f64 = 4.0 * std::f64::consts::SQRT_2;
const DIM_SAMPLES: usize = 3;

fn speed_recovery(tier: Tier) -> Result<Outcome> {
    let h = [0.05, 0.02, 0.01];
    let single = handmade(vec![road(&[0.0, 0.0], &[1.0, 0.0], 4.0)?], 3.0, 0.1)?;
    let a = recover_speed(&single, &v(&[0.3, 0.0]), &h, 0.1)?;
    let cross = handmade(
        vec![
            road(&[0.0, 0.0], &[1.0, 0.0], 3.0)?,
            road(&[0.0, 0.0], &[1.0, 1.0], 5.0)?,
        ],
        3.0,
        0.1,
    )?;
    let b = recover_speed(&cross, &v(&[0.0, 0.0]), &h, 0.1)?;
    let exact = (a - 0.25).abs() <= 1e-6 && (b - 0.2).abs() <= 1e-6;
    let eps = 0.3;
    let w = WindowSpec::centered(2, 3.0, 3.0, eps)?;
    let n = pick(tier, 5, 20);
    let mut worst = 0.0f64;
    let mut used = 0;
    for i in 0..n {
        let sample = sample_process(derive_seed(14, i as u64), &w)?;
        let Some((x, speed)) = on_road_point(&sample, 0.5) else {
            continue;
        };
        let q = recover_speed(&sample, &x, &h, eps)?;
        worst = worst.max((q * speed - 1.0).abs());
        used += 1;
    }
    Ok(Outcome::new(
        exact && worst <= 0.05 && used > 0,
        format!(
            "single road {a:.9}, crossing {b:.9}, random on-road max relative error {worst:.2e} over {used} points"
        ),
    ))
}
